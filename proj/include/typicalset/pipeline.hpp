#pragma once

// Experiment wiring: rectify -> ReLU -> head -> score -> metrics over one ID
// dump and any number of OOD dumps, plus lambda sweeps and CSV/JSON emitters.

#include "typicalset/dump.hpp"
#include "typicalset/metrics.hpp"
#include "typicalset/rectify.hpp"
#include "typicalset/scores.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace typicalset {

enum class OutputFormat { Csv, Json };

inline constexpr double kDefaultLambda = 1.25;
inline constexpr double kDefaultReactPercentile = 0.90;

struct RunConfig {
    RectifierSpec rectifier;
    ScoreName score_name = ScoreName::Energy;
    // Empty selects the score's conventional default (OdinT 1000, GradNorm 1).
    std::optional<double> temperature;
    double alpha = kDefaultAlpha;
    std::vector<double> lambda_grid;
    std::uint64_t seed = 0;
    OutputFormat format = OutputFormat::Csv;
    bool percent = false;
    double mahalanobis_shrinkage = kDefaultMahalanobisShrinkage;
    // When the ReAct threshold is not given explicitly it is this quantile of the
    // fit batch's post-activation values.
    bool react_threshold_from_data = true;
    double react_percentile = kDefaultReactPercentile;

    void validate() const;
    double effective_temperature() const;
};

struct NamedDump {
    std::string name;
    FeatureDump dump;
};

struct EvalInputs {
    FeatureDump id;
    std::vector<NamedDump> oods;
    // Training-side features for TFEM / ReAct / Mahalanobis estimates. Falls back to `id`.
    std::optional<FeatureDump> fit;
};

// Everything a score needs that is estimated once per run.
struct ScoringContext {
    std::optional<BnChannelStats> bn_stats;
    std::optional<LinearHead> head;
    std::size_t classes = 0;
    std::optional<BnChannelStats> empirical_stats;
    std::optional<double> react_threshold;
    const FeatureBatch* fit_batch = nullptr;
};

// Resolves the rectifier against the context (fills TFEM stats / ReAct threshold).
RectifierSpec resolve_rectifier(const RunConfig& config, const ScoringContext& context,
                                RectifierSpec spec);

ScoringContext make_context(const RunConfig& config, const EvalInputs& inputs);

// A score bound to one rectifier. Mahalanobis is fitted on the rectified fit
// batch at construction.
class Scorer {
public:
    Scorer(const RunConfig& config, const ScoringContext& context, RectifierSpec rectifier);

    ScoreReport score(const FeatureBatch& batch) const;
    const RectifierSpec& rectifier() const noexcept { return rectifier_; }

private:
    const RunConfig& config_;
    const ScoringContext& context_;
    RectifierSpec rectifier_;
    std::optional<MahalanobisModel> mahalanobis_;
};

ScoreReport score_batch(const FeatureBatch& batch, const RunConfig& config,
                        const ScoringContext& context, const RectifierSpec& rectifier);

struct EvalRow {
    std::string rectifier;
    std::string score;
    std::optional<double> lambda;
    std::string ood_name;
    double fpr_at_tpr = 0.0;
    double auroc = 0.0;
    double gamma = 0.0;
    std::size_t n_id = 0;
    std::size_t n_ood = 0;
};

// Rows for each OOD dump followed by an unweighted "average" row.
std::vector<EvalRow> run_eval(const RunConfig& config, const EvalInputs& inputs);

// A "none" baseline block, then one block per lambda in grid order.
std::vector<EvalRow> run_sweep(const RunConfig& config, const EvalInputs& inputs);

std::string format_number(double value);
std::string rows_to_csv(const std::vector<EvalRow>& rows, bool percent);
std::string rows_to_json(const std::vector<EvalRow>& rows, bool percent);
std::string scores_to_csv(const ScoreReport& report);
std::string scores_to_json(const ScoreReport& report);

// Parses "0.25:4:0.25" (start:stop:step, inclusive) or "0.5,1,2".
std::vector<double> parse_lambda_grid(const std::string& text);

void validate_lambda_grid(const std::vector<double>& grid);

} // namespace typicalset
