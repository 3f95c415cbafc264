// typicalset: command-line front end.
//
//   typicalset theory   --lambda-grid 0.25,0.5,1 --mc-draws 1000000 --seed 7
//   typicalset simulate --spec spec.json --out dir/
//   typicalset score    --id id.batsdump --rectifier bats --lambda 1.25 --score energy
//   typicalset eval     --id id.batsdump --ood a.batsdump,b.batsdump --alpha 0.05
//   typicalset sweep    --id id.batsdump --ood a.batsdump --lambda-grid 0.25:4:0.25
//
// Errors go to stderr as "error: <category>: <message>" with exit status 2.

#include "typicalset/dump.hpp"
#include "typicalset/error.hpp"
#include "typicalset/pipeline.hpp"
#include "typicalset/synthetic.hpp"
#include "typicalset/theory.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace typicalset;

namespace {

struct CommonOptions {
    std::string format = "csv";
    std::string output;
    bool percent = false;
};

struct DetectOptions {
    std::string id_path;
    std::vector<std::string> ood_paths;
    std::string fit_path;
    std::string rectifier = "bats";
    double lambda = kDefaultLambda;
    double react_threshold = 0.0;
    double react_percentile = kDefaultReactPercentile;
    std::string score = "energy";
    double temperature = 0.0;
    double alpha = kDefaultAlpha;
    double shrinkage = kDefaultMahalanobisShrinkage;
    std::string lambda_grid = "0.25:4:0.25";
};

void emit(const CommonOptions& common, const std::string& text) {
    if (common.output.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(common.output, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot open '" + common.output + "' for writing");
    }
    out << text;
}

OutputFormat parse_format(const std::string& name) {
    if (name == "csv") return OutputFormat::Csv;
    if (name == "json") return OutputFormat::Json;
    throw ParameterError("unknown format '" + name + "' (expected csv|json)");
}

std::uint64_t resolve_seed(std::uint64_t seed) {
    if (const char* env = std::getenv("TYPICALSET_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ParameterError(std::string("TYPICALSET_SEED='") + env + "' is not an integer");
        }
    }
    return seed;
}

RunConfig make_config(const DetectOptions& opts, const CommonOptions& common,
                      const CLI::App& sub) {
    RunConfig config;
    config.rectifier.kind = parse_rectifier_kind(opts.rectifier);
    config.rectifier.lambda = opts.lambda;
    if (sub.count("--react-threshold") > 0) {
        config.rectifier.react_threshold = opts.react_threshold;
        config.react_threshold_from_data = false;
    }
    config.react_percentile = opts.react_percentile;
    config.score_name = parse_score_name(opts.score);
    if (sub.count("--temperature") > 0) {
        config.temperature = opts.temperature;
    }
    config.alpha = opts.alpha;
    config.mahalanobis_shrinkage = opts.shrinkage;
    config.format = parse_format(common.format);
    config.percent = common.percent;
    config.validate();
    return config;
}

EvalInputs load_inputs(const DetectOptions& opts) {
    EvalInputs inputs{read_dump(opts.id_path), {}, std::nullopt};
    for (const auto& path : opts.ood_paths) {
        inputs.oods.push_back({fs::path(path).stem().string(), read_dump(path)});
    }
    if (!opts.fit_path.empty()) {
        inputs.fit = read_dump(opts.fit_path);
    }
    return inputs;
}

void add_detect_options(CLI::App& sub, DetectOptions& opts, bool with_ood) {
    sub.add_option("--id", opts.id_path, "ID feature dump")->required();
    if (with_ood) {
        sub.add_option("--ood", opts.ood_paths, "OOD feature dump(s), comma separated")
            ->required()
            ->delimiter(',');
    }
    sub.add_option("--fit", opts.fit_path,
                   "training-side dump for TFEM/ReAct/Mahalanobis estimates (default: --id)");
    sub.add_option("--rectifier", opts.rectifier, "none|bats|react|tfem")->capture_default_str();
    sub.add_option("--lambda", opts.lambda, "truncation strength for bats/tfem")
        ->capture_default_str();
    sub.add_option("--react-threshold", opts.react_threshold,
                   "ReAct clamp (default: --react-percentile of fit activations)");
    sub.add_option("--react-percentile", opts.react_percentile)->capture_default_str();
    sub.add_option("--score", opts.score, "energy|msp|odin_t|gradnorm|mahalanobis")
        ->capture_default_str();
    sub.add_option("--temperature", opts.temperature,
                   "softmax temperature (default 1000 for odin_t, 1 otherwise)");
    sub.add_option("--shrinkage", opts.shrinkage, "Mahalanobis diagonal shrinkage")
        ->capture_default_str();
}

void add_common_options(CLI::App& sub, CommonOptions& common) {
    sub.add_option("--format", common.format, "csv|json")->capture_default_str();
    sub.add_option("-o,--output", common.output, "write to a file instead of stdout");
}

std::string run_theory(const std::vector<double>& grid, std::size_t draws, std::uint64_t seed,
                       double mu, double sigma, unsigned workers, OutputFormat format) {
    nlohmann::ordered_json rows = nlohmann::ordered_json::array();
    std::ostringstream csv;
    csv << "lambda,variance_ratio,bias_per_sigma,mean_z,mean_zbar,mc_variance_ratio,"
           "mc_bias_per_sigma,mc_mean_z,mc_mean_zbar,abs_err_variance_ratio,"
           "abs_err_bias_per_sigma,abs_err_mean_z,abs_err_mean_zbar\n";
    for (double lambda : grid) {
        const theory::TruncationAnalysis a = theory::analyze(mu, sigma, lambda);
        const theory::McTruncatedMoments mc =
            theory::mc_truncated_moments(mu, sigma, lambda, draws, seed, workers);
        const double mc_c = mc.clipped.variance / (sigma * sigma);
        const double mc_bias = (mc.clipped_rectified.mean - mc.rectified.mean) / sigma;
        const double values[] = {lambda,
                                 a.variance_ratio,
                                 a.bias_per_sigma,
                                 a.mean_z,
                                 a.mean_zbar,
                                 mc_c,
                                 mc_bias,
                                 mc.rectified.mean,
                                 mc.clipped_rectified.mean,
                                 std::abs(mc_c - a.variance_ratio),
                                 std::abs(mc_bias - a.bias_per_sigma),
                                 std::abs(mc.rectified.mean - a.mean_z),
                                 std::abs(mc.clipped_rectified.mean - a.mean_zbar)};
        static constexpr const char* kNames[] = {
            "lambda", "variance_ratio", "bias_per_sigma", "mean_z", "mean_zbar",
            "mc_variance_ratio", "mc_bias_per_sigma", "mc_mean_z", "mc_mean_zbar",
            "abs_err_variance_ratio", "abs_err_bias_per_sigma", "abs_err_mean_z",
            "abs_err_mean_zbar"};
        nlohmann::ordered_json row;
        for (std::size_t i = 0; i < std::size(values); ++i) {
            csv << (i ? "," : "") << format_number(values[i]);
            row[kNames[i]] = values[i];
        }
        csv << '\n';
        rows.push_back(std::move(row));
    }
    return format == OutputFormat::Csv ? csv.str() : rows.dump(2) + "\n";
}

synthetic::OodKind parse_ood_kind(const std::string& name, double param) {
    if (name == "heavy_tail") return synthetic::HeavyTail{param};
    if (name == "mean_shift") return synthetic::MeanShift{param};
    if (name == "scale_inflate") return synthetic::ScaleInflate{param};
    throw ParameterError("unknown OOD kind '" + name +
                         "' (expected heavy_tail|mean_shift|scale_inflate)");
}

// Spec file: {"n_samples":5000,"d_channels":64,"k_classes":10,
//             "ood_kind":{"type":"heavy_tail","param":3},"seed":7}
void apply_spec_file(const std::string& path, synthetic::SyntheticSpec& spec) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open spec file '" + path + "'");
    }
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        spec.n_samples = j.value("n_samples", spec.n_samples);
        spec.d_channels = j.value("d_channels", spec.d_channels);
        spec.k_classes = j.value("k_classes", spec.k_classes);
        spec.seed = j.value("seed", spec.seed);
        if (j.contains("ood_kind")) {
            const auto& kind = j.at("ood_kind");
            spec.ood_kind = parse_ood_kind(kind.at("type").get<std::string>(),
                                           kind.at("param").get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("spec file '" + path + "': " + e.what());
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Typical-set feature rectification for out-of-distribution detection"};
    app.require_subcommand(1);
    CommonOptions common;

    // theory
    auto* theory_cmd = app.add_subcommand("theory", "closed-form truncation moments vs Monte Carlo");
    std::string theory_grid = "0.25,0.5,1,1.5,2,3";
    std::size_t mc_draws = 1000000;
    std::uint64_t theory_seed = 20220101;
    double theory_mu = 0.0;
    double theory_sigma = 1.0;
    unsigned workers = 1;
    theory_cmd->add_option("--lambda-grid", theory_grid)->capture_default_str();
    theory_cmd->add_option("--mc-draws", mc_draws)->capture_default_str();
    theory_cmd->add_option("--seed", theory_seed)->capture_default_str();
    theory_cmd->add_option("--mu", theory_mu)->capture_default_str();
    theory_cmd->add_option("--sigma", theory_sigma)->capture_default_str();
    theory_cmd->add_option("--workers", workers)->capture_default_str();
    add_common_options(*theory_cmd, common);

    // simulate
    auto* simulate_cmd = app.add_subcommand("simulate", "write synthetic ID/train/OOD dumps");
    synthetic::SyntheticSpec sim_spec;
    std::string spec_path;
    std::string out_dir;
    std::string ood_kind = "heavy_tail";
    double ood_param = 3.0;
    simulate_cmd->add_option("--spec", spec_path, "JSON spec file; its keys take precedence over the flags");
    simulate_cmd->add_option("--out", out_dir, "output directory")->required();
    simulate_cmd->add_option("--n", sim_spec.n_samples)->capture_default_str();
    simulate_cmd->add_option("--d", sim_spec.d_channels)->capture_default_str();
    simulate_cmd->add_option("--k", sim_spec.k_classes)->capture_default_str();
    simulate_cmd->add_option("--ood", ood_kind, "heavy_tail|mean_shift|scale_inflate")
        ->capture_default_str();
    simulate_cmd->add_option("--ood-param", ood_param, "dof, delta or scale")->capture_default_str();
    simulate_cmd->add_option("--seed", sim_spec.seed)->capture_default_str();

    // score / eval / sweep
    DetectOptions score_opts;
    auto* score_cmd = app.add_subcommand("score", "per-sample OOD scores for one dump");
    add_detect_options(*score_cmd, score_opts, false);
    add_common_options(*score_cmd, common);

    DetectOptions eval_opts;
    auto* eval_cmd = app.add_subcommand("eval", "FPR@TPR and AUROC per OOD dump");
    add_detect_options(*eval_cmd, eval_opts, true);
    eval_cmd->add_option("--alpha", eval_opts.alpha, "1 - target TPR")->capture_default_str();
    eval_cmd->add_flag("--percent", common.percent, "report rates in percent");
    add_common_options(*eval_cmd, common);

    DetectOptions sweep_opts;
    auto* sweep_cmd = app.add_subcommand("sweep", "metrics across a lambda grid");
    add_detect_options(*sweep_cmd, sweep_opts, true);
    sweep_cmd->add_option("--alpha", sweep_opts.alpha)->capture_default_str();
    sweep_cmd->add_option("--lambda-grid", sweep_opts.lambda_grid, "start:stop:step or a,b,c")
        ->capture_default_str();
    sweep_cmd->add_flag("--percent", common.percent, "report rates in percent");
    add_common_options(*sweep_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        if (theory_cmd->parsed()) {
            const auto grid = parse_lambda_grid(theory_grid);
            emit(common, run_theory(grid, mc_draws, resolve_seed(theory_seed), theory_mu,
                                    theory_sigma, workers, parse_format(common.format)));
        } else if (simulate_cmd->parsed()) {
            sim_spec.ood_kind = parse_ood_kind(ood_kind, ood_param);
            if (!spec_path.empty()) {
                apply_spec_file(spec_path, sim_spec);
            }
            sim_spec.seed = resolve_seed(sim_spec.seed);
            const synthetic::SyntheticModel model = synthetic::make_model(sim_spec);
            const FeatureBatch id = synthetic::sample_id(sim_spec, model, synthetic::kIdStream);
            const FeatureBatch train =
                synthetic::sample_id(sim_spec, model, synthetic::kTrainStream);
            const FeatureBatch ood = synthetic::gen_ood(sim_spec, model.stats);
            fs::create_directories(out_dir);
            write_dump(fs::path(out_dir) / "id.batsdump", id, &model.stats, &model.head);
            write_dump(fs::path(out_dir) / "train.batsdump", train, &model.stats, &model.head);
            write_dump(fs::path(out_dir) / "ood.batsdump", ood, &model.stats, &model.head);
        } else if (score_cmd->parsed()) {
            const RunConfig config = make_config(score_opts, common, *score_cmd);
            const EvalInputs inputs = load_inputs(score_opts);
            const ScoringContext context = make_context(config, inputs);
            const ScoreReport report =
                score_batch(inputs.id.batch, config, context, config.rectifier);
            emit(common, config.format == OutputFormat::Csv ? scores_to_csv(report)
                                                            : scores_to_json(report));
        } else if (eval_cmd->parsed() || sweep_cmd->parsed()) {
            const bool sweep = sweep_cmd->parsed();
            const DetectOptions& opts = sweep ? sweep_opts : eval_opts;
            RunConfig config = make_config(opts, common, sweep ? *sweep_cmd : *eval_cmd);
            if (sweep) {
                config.lambda_grid = parse_lambda_grid(opts.lambda_grid);
            }
            const EvalInputs inputs = load_inputs(opts);
            const auto rows = sweep ? run_sweep(config, inputs) : run_eval(config, inputs);
            emit(common, config.format == OutputFormat::Csv ? rows_to_csv(rows, config.percent)
                                                            : rows_to_json(rows, config.percent));
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.category() << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
