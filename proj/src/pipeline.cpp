#include "typicalset/pipeline.hpp"

#include "typicalset/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace typicalset {

void validate_lambda_grid(const std::vector<double>& grid) {
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > 0.0) || !std::isfinite(grid[i])) {
            throw ParameterError("lambda grid entries must be finite and > 0");
        }
        if (i > 0 && !(grid[i] > grid[i - 1])) {
            throw ParameterError("lambda grid must be strictly increasing");
        }
    }
}

void RunConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ParameterError("alpha must lie in (0, 1)");
    }
    validate_lambda_grid(lambda_grid);
    if (temperature && !(*temperature > 0.0)) {
        throw ParameterError("temperature must be > 0");
    }
    if (!(react_percentile > 0.0 && react_percentile <= 1.0)) {
        throw ParameterError("react percentile must lie in (0, 1]");
    }
}

double RunConfig::effective_temperature() const {
    if (temperature) {
        return *temperature;
    }
    switch (score_name) {
    case ScoreName::OdinT: return kDefaultOdinTemperature;
    case ScoreName::GradNorm: return kDefaultGradNormTemperature;
    default: return 1.0;
    }
}

namespace {

void require_compatible(const FeatureDump& id, const NamedDump& ood) {
    if (ood.dump.batch.channels() != id.batch.channels()) {
        throw ShapeError("OOD dump '" + ood.name + "' has d=" +
                         std::to_string(ood.dump.batch.channels()) + " but the ID dump has d=" +
                         std::to_string(id.batch.channels()));
    }
    if (ood.dump.batch.stage() != id.batch.stage()) {
        throw ShapeError("OOD dump '" + ood.name + "' is " +
                         std::string(to_string(ood.dump.batch.stage())) + " but the ID dump is " +
                         std::string(to_string(id.batch.stage())));
    }
    if (ood.dump.head && id.head && ood.dump.head->classes() != id.head->classes()) {
        throw ShapeError("OOD dump '" + ood.name + "' has K=" +
                         std::to_string(ood.dump.head->classes()) + " but the ID dump has K=" +
                         std::to_string(id.head->classes()));
    }
}

FeatureBatch activated(const FeatureBatch& b) {
    return b.stage() == Stage::PreActivation ? relu(b) : b;
}

// Labels for the Mahalanobis fit: stored labels, else the head's predictions.
FeatureBatch labelled_for_fit(const FeatureBatch& rectified, const ScoringContext& context) {
    if (rectified.labels()) {
        return rectified;
    }
    if (!context.head) {
        throw DataError("mahalanobis needs labels in the fit dump or a head to predict them");
    }
    const Matrix logits = apply_head(rectified, *context.head);
    std::vector<std::int32_t> labels(rectified.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        labels[i] = static_cast<std::int32_t>(argmax(logits.row(i)));
    }
    return FeatureBatch(rectified.data(), rectified.stage(), std::move(labels));
}

} // namespace

ScoringContext make_context(const RunConfig& config, const EvalInputs& inputs) {
    config.validate();
    ScoringContext ctx;
    ctx.bn_stats = inputs.id.stats;
    ctx.head = inputs.id.head;
    ctx.classes = inputs.id.head ? inputs.id.head->classes() : inputs.id.classes;
    ctx.fit_batch = inputs.fit ? &inputs.fit->batch : &inputs.id.batch;
    if (ctx.fit_batch->channels() != inputs.id.batch.channels()) {
        throw ShapeError("fit dump has d=" + std::to_string(ctx.fit_batch->channels()) +
                         " but the ID dump has d=" + std::to_string(inputs.id.batch.channels()));
    }
    if (config.score_name != ScoreName::Mahalanobis && !ctx.head) {
        throw ShapeError("ID dump has no head section; score '" +
                         std::string(to_string(config.score_name)) + "' needs one");
    }
    for (const auto& ood : inputs.oods) {
        require_compatible(inputs.id, ood);
    }

    const bool needs_empirical = config.rectifier.kind == RectifierKind::Tfem &&
                                 !config.rectifier.empirical_stats;
    if (needs_empirical) {
        ctx.empirical_stats = estimate_channel_stats(activated(*ctx.fit_batch));
    }
    if (config.rectifier.kind == RectifierKind::React && config.react_threshold_from_data) {
        ctx.react_threshold =
            activation_percentile(activated(*ctx.fit_batch), config.react_percentile);
    }
    return ctx;
}

RectifierSpec resolve_rectifier(const RunConfig& config, const ScoringContext& context,
                                RectifierSpec spec) {
    if (spec.kind == RectifierKind::Tfem && !spec.empirical_stats) {
        spec.empirical_stats = context.empirical_stats;
    }
    if (spec.kind == RectifierKind::React && config.react_threshold_from_data &&
        context.react_threshold) {
        spec.react_threshold = *context.react_threshold;
    }
    if (spec.kind == RectifierKind::Bats && !context.bn_stats) {
        throw ParameterError("bats needs BN channel stats but the ID dump has no bn section");
    }
    spec.validate();
    return spec;
}

Scorer::Scorer(const RunConfig& config, const ScoringContext& context, RectifierSpec rectifier)
    : config_(config), context_(context), rectifier_(std::move(rectifier)) {
    if (config_.score_name == ScoreName::Mahalanobis) {
        const FeatureBatch fit = labelled_for_fit(
            rectify(*context_.fit_batch, rectifier_,
                    context_.bn_stats ? &*context_.bn_stats : nullptr),
            context_);
        std::size_t classes = context_.classes;
        if (classes == 0) {
            const auto& labels = *fit.labels();
            classes = static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
        }
        mahalanobis_ = mahalanobis_fit(fit, classes, config_.mahalanobis_shrinkage);
    }
}

ScoreReport Scorer::score(const FeatureBatch& batch) const {
    const FeatureBatch z =
        rectify(batch, rectifier_, context_.bn_stats ? &*context_.bn_stats : nullptr);
    ScoreReport report;
    report.score_name = config_.score_name;
    report.rectifier = rectifier_.describe();
    report.temperature = config_.effective_temperature();
    switch (config_.score_name) {
    case ScoreName::Energy:
        report.scores = energy_score(apply_head(z, *context_.head));
        break;
    case ScoreName::Msp:
        report.scores = msp_score(apply_head(z, *context_.head));
        break;
    case ScoreName::OdinT:
        report.scores = odin_t_score(apply_head(z, *context_.head), report.temperature);
        break;
    case ScoreName::GradNorm:
        report.scores = gradnorm_score(z, *context_.head, report.temperature);
        break;
    case ScoreName::Mahalanobis:
        report.scores = mahalanobis_score(z, *mahalanobis_);
        break;
    }
    return report;
}

ScoreReport score_batch(const FeatureBatch& batch, const RunConfig& config,
                        const ScoringContext& context, const RectifierSpec& rectifier) {
    return Scorer(config, context, resolve_rectifier(config, context, rectifier)).score(batch);
}

namespace {

std::optional<double> lambda_of(const RectifierSpec& spec) {
    if (spec.kind == RectifierKind::Bats || spec.kind == RectifierKind::Tfem) {
        return spec.lambda;
    }
    return std::nullopt;
}

void append_block(std::vector<EvalRow>& rows, const RunConfig& config, const EvalInputs& inputs,
                  const ScoringContext& context, const RectifierSpec& rectifier) {
    const Scorer scorer(config, context, resolve_rectifier(config, context, rectifier));
    const ScoreReport id_report = scorer.score(inputs.id.batch);

    EvalRow average;
    average.rectifier = std::string(to_string(rectifier.kind));
    average.score = std::string(to_string(config.score_name));
    average.lambda = lambda_of(rectifier);
    average.ood_name = "average";
    average.n_id = id_report.scores.size();

    for (const auto& ood : inputs.oods) {
        const ScoreReport ood_report = scorer.score(ood.dump.batch);
        const DetectionMetrics m = detection_metrics(id_report.scores, ood_report.scores,
                                                     config.alpha);
        EvalRow row = average;
        row.ood_name = ood.name;
        row.fpr_at_tpr = m.fpr_at_tpr;
        row.auroc = m.auroc;
        row.gamma = m.gamma;
        row.n_ood = m.n_ood;
        rows.push_back(row);
        average.fpr_at_tpr += m.fpr_at_tpr;
        average.auroc += m.auroc;
        average.gamma = m.gamma;
        average.n_ood += m.n_ood;
    }
    const auto count = static_cast<double>(inputs.oods.size());
    average.fpr_at_tpr /= count;
    average.auroc /= count;
    rows.push_back(average);
}

} // namespace

std::vector<EvalRow> run_eval(const RunConfig& config, const EvalInputs& inputs) {
    if (inputs.oods.empty()) {
        throw DataError("run_eval needs at least one OOD dump");
    }
    const ScoringContext context = make_context(config, inputs);
    std::vector<EvalRow> rows;
    append_block(rows, config, inputs, context, config.rectifier);
    return rows;
}

std::vector<EvalRow> run_sweep(const RunConfig& config, const EvalInputs& inputs) {
    if (inputs.oods.empty()) {
        throw DataError("run_sweep needs at least one OOD dump");
    }
    if (config.rectifier.kind != RectifierKind::Bats &&
        config.rectifier.kind != RectifierKind::Tfem) {
        throw ParameterError("sweeps vary lambda and need rectifier bats or tfem");
    }
    if (config.lambda_grid.empty()) {
        throw ParameterError("sweep needs a nonempty lambda grid");
    }
    const ScoringContext context = make_context(config, inputs);
    std::vector<EvalRow> rows;
    append_block(rows, config, inputs, context, RectifierSpec{});
    for (double lambda : config.lambda_grid) {
        RectifierSpec spec = config.rectifier;
        spec.lambda = lambda;
        append_block(rows, config, inputs, context, spec);
    }
    return rows;
}

std::string format_number(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

namespace {

double display(double v, bool percent) { return percent ? 100.0 * v : v; }

} // namespace

std::string rows_to_csv(const std::vector<EvalRow>& rows, bool percent) {
    std::ostringstream out;
    out << "rectifier,score,lambda,ood_name,fpr_at_tpr,auroc,gamma,n_id,n_ood\n";
    for (const auto& r : rows) {
        out << r.rectifier << ',' << r.score << ',' << (r.lambda ? format_number(*r.lambda) : "")
            << ',' << r.ood_name << ',' << format_number(display(r.fpr_at_tpr, percent)) << ','
            << format_number(display(r.auroc, percent)) << ',' << format_number(r.gamma) << ','
            << r.n_id << ',' << r.n_ood << '\n';
    }
    return out.str();
}

std::string rows_to_json(const std::vector<EvalRow>& rows, bool percent) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& r : rows) {
        nlohmann::ordered_json j;
        j["rectifier"] = r.rectifier;
        j["score"] = r.score;
        j["lambda"] = r.lambda ? nlohmann::ordered_json(*r.lambda) : nlohmann::ordered_json();
        j["ood_name"] = r.ood_name;
        j["fpr_at_tpr"] = display(r.fpr_at_tpr, percent);
        j["auroc"] = display(r.auroc, percent);
        j["gamma"] = r.gamma;
        j["n_id"] = r.n_id;
        j["n_ood"] = r.n_ood;
        out.push_back(std::move(j));
    }
    return out.dump(2) + "\n";
}

std::string scores_to_csv(const ScoreReport& report) {
    std::ostringstream out;
    out << "index,score\n";
    for (std::size_t i = 0; i < report.scores.size(); ++i) {
        out << i << ',' << format_number(report.scores[i]) << '\n';
    }
    return out.str();
}

std::string scores_to_json(const ScoreReport& report) {
    nlohmann::ordered_json j;
    j["score_name"] = std::string(to_string(report.score_name));
    j["rectifier"] = report.rectifier;
    j["temperature"] = report.temperature;
    j["scores"] = report.scores;
    return j.dump(2) + "\n";
}

std::vector<double> parse_lambda_grid(const std::string& text) {
    auto parse = [&](std::string_view token) {
        double v = 0.0;
        const auto res = std::from_chars(token.data(), token.data() + token.size(), v);
        if (res.ec != std::errc() || res.ptr != token.data() + token.size()) {
            throw ParameterError("cannot parse '" + std::string(token) + "' in lambda grid '" +
                                 text + "'");
        }
        return v;
    };
    std::vector<double> grid;
    if (text.find(':') != std::string::npos) {
        std::vector<double> parts;
        std::string_view rest = text;
        while (true) {
            const auto pos = rest.find(':');
            parts.push_back(parse(rest.substr(0, pos)));
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
        if (parts.size() != 3 || !(parts[2] > 0.0)) {
            throw ParameterError("lambda grid range must be start:stop:step with step > 0");
        }
        // Integer stepping avoids accumulating the step's rounding error.
        const auto steps = static_cast<long>(std::floor((parts[1] - parts[0]) / parts[2] + 1e-9));
        for (long i = 0; i <= steps; ++i) {
            grid.push_back(parts[0] + static_cast<double>(i) * parts[2]);
        }
    } else {
        std::string_view rest = text;
        while (!rest.empty()) {
            const auto pos = rest.find(',');
            grid.push_back(parse(rest.substr(0, pos)));
            if (pos == std::string_view::npos) break;
            rest.remove_prefix(pos + 1);
        }
    }
    validate_lambda_grid(grid);
    return grid;
}

} // namespace typicalset
