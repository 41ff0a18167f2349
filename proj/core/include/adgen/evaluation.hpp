#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "adgen/catalog.hpp"
#include "adgen/gateway.hpp"
#include "adgen/image.hpp"
#include "adgen/layout.hpp"
#include "adgen/pipeline.hpp"
#include "adgen/store.hpp"

namespace adgen {

enum class EvalDimension { authenticity, visual_appeal, layout_quality, theme_alignment };
inline constexpr std::array<EvalDimension, 4> kAllDimensions = {
    EvalDimension::authenticity, EvalDimension::visual_appeal, EvalDimension::layout_quality,
    EvalDimension::theme_alignment};

std::string to_string(EvalDimension d);
EvalDimension parse_dimension(std::string_view text);
/// Name of the bundled judge prompt asset.
std::string judge_asset(EvalDimension d);
/// "Product Authenticity", ... as used in table captions.
std::string display_name(EvalDimension d);

struct EvalScore {
    std::string generation_id;
    EvalDimension dimension = EvalDimension::authenticity;
    int score = 0;
    std::string explanation;
    std::string judge_model;
    bool som = false;
    std::string config;  // A1..A4 or Ours
    std::string raw;
    bool operator==(const EvalScore&) const = default;
};

nlohmann::json score_to_json(const EvalScore& s);
EvalScore score_from_json(const nlohmann::json& j);
void append_scores(const std::filesystem::path& log, const std::vector<EvalScore>& scores);
std::vector<EvalScore> read_scores(const std::filesystem::path& log);

enum class FailureLabel : int {
    high_quality = 0,
    category_mismatch = 1,
    unnatural_pairing = 2,
    inaccurate_relative_size = 3,
    unreasonable_placement = 4,
    appearance_changed = 5,
    poor_background = 6,
};

std::string describe(FailureLabel label);
/// Throws InvalidArgument outside 0..6.
FailureLabel failure_label_from_int(int value);

struct LabeledGeneration {
    std::string generation_id;
    FailureLabel label = FailureLabel::high_quality;
    std::string note;
    bool operator==(const LabeledGeneration&) const = default;
};

/// CSV with header `generation_id,label,note`; RFC 4180 quoting.
std::string write_labels_csv(const std::vector<LabeledGeneration>& rows);
std::vector<LabeledGeneration> read_labels_csv(std::string_view csv);

inline constexpr int kSomStrokePx = 4;

/// Red (product A) and green (product B) box outlines, 4 px wide, drawn
/// inside each box. Boxes are clipped to the image; boxes thinner than the
/// stroke become solid blobs of at least 4x4.
RgbImage annotate_som(const RgbImage& ad, const LayoutBox& box_a, const LayoutBox& box_b);

/// Configuration column of a record: "Ours" without ablations, otherwise
/// the ablation names joined by '+'.
std::string config_label(const std::set<Ablation>& ablations);

struct JudgeRequest {
    std::string generation_id;
    std::string text_prompt;  // the generation prompt
    RgbImage product_a;
    RgbImage product_b;
    RgbImage ad;
    std::optional<std::array<LayoutBox, 2>> boxes;  // required for SoM
    EvalDimension dimension = EvalDimension::authenticity;
    std::string judge_model = "gpt-4o";
    bool som = false;
    std::string config = "Ours";
};

/// The chat request actually dispatched (SoM applied).
ChatVisionRequest judge_chat_request(const JudgeRequest& req, bool retry = false);

/// Scores one ad. A reply that breaks the protocol is retried once with the
/// retry sentence appended; a second failure throws JudgeProtocolViolation or
/// UnparseableModelOutput with the raw text.
EvalScore judge(VisionChatBackend& chat, const JudgeRequest& req);

/// Builds the judge request of a stored ok record.
JudgeRequest judge_request_for(const GenerationRecord& record, const Catalog& catalog, const Store& store,
                               EvalDimension dimension, const std::string& judge_model, bool som);

struct TableCell {
    std::size_t count = 0;
    long long sum = 0;
    double mean = 0.0;
    /// Mean in thousandths, rounded half up.
    long long mean_milli = 0;
    std::string formatted() const;  // "4.410"
};

struct TableRow {
    std::string judge_model;
    bool som = false;
    std::map<std::string, TableCell> cells;  // config -> cell
    std::string label() const;  // "GPT-4o" or "GPT-4o (SoM)"
};

struct AblationTable {
    EvalDimension dimension = EvalDimension::authenticity;
    std::vector<TableRow> rows;  // sorted by judge model, plain before SoM
    std::vector<std::string> columns() const;
    const TableCell* cell(const std::string& judge_model, bool som, const std::string& config) const;
};

/// Rounds a mean of integers to thousandths, half up, exactly.
long long round_mean_milli(long long sum, std::size_t count);

/// Mean per (judge model, SoM, config) over scores of `dimension`.
AblationTable aggregate(const std::vector<EvalScore>& scores, EvalDimension dimension);

/// Display form of a judge model id: "gpt-4o" -> "GPT-4o".
std::string judge_display_name(const std::string& model);
std::string render_markdown(const AblationTable& table);
std::string render_csv(const AblationTable& table);

class ScalarScorer {
public:
    virtual ~ScalarScorer() = default;
    virtual std::string name() const = 0;
    virtual std::string version() const = 0;
    virtual double score(const RgbImage& ad, const std::string& prompt) = 0;
};

struct ScalarScores {
    std::map<std::string, double> values;       // "name@version" -> value
    std::map<std::string, std::string> errors;  // scorers that failed
};

class ScorerRegistry {
public:
    void add(std::shared_ptr<ScalarScorer> scorer);
    std::size_t size() const { return scorers_.size(); }
    /// Runs every scorer; a failing scorer is recorded and the rest proceed.
    ScalarScores run(const RgbImage& ad, const std::string& prompt) const;

private:
    std::vector<std::shared_ptr<ScalarScorer>> scorers_;
};

/// Scalar scores keyed by generation id, persisted next to the records.
void attach_scalar_scores(Store& store, const std::string& generation_id, const ScalarScores& scores);
std::map<std::string, double> scalar_scores_of(const Store& store, const std::string& generation_id);

}  // namespace adgen
