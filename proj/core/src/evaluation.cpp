#include "adgen/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>

#include "adgen/errors.hpp"
#include "adgen/json_answer.hpp"
#include "adgen/prompts.hpp"
#include "adgen/text.hpp"

namespace adgen {

using nlohmann::json;

std::string to_string(EvalDimension d) {
    switch (d) {
        case EvalDimension::authenticity: return "authenticity";
        case EvalDimension::visual_appeal: return "visual_appeal";
        case EvalDimension::layout_quality: return "layout_quality";
        case EvalDimension::theme_alignment: return "theme_alignment";
    }
    return "?";
}

EvalDimension parse_dimension(std::string_view text) {
    std::string t = text::lower(text::trim(text));
    std::replace(t.begin(), t.end(), '-', '_');
    std::replace(t.begin(), t.end(), ' ', '_');
    for (auto d : kAllDimensions) {
        if (to_string(d) == t) return d;
    }
    throw InvalidArgument("unknown dimension '" + std::string(text) +
                          "' (expected authenticity, visual_appeal, layout_quality or theme_alignment)");
}

std::string judge_asset(EvalDimension d) { return "judge_" + to_string(d); }

std::string display_name(EvalDimension d) {
    switch (d) {
        case EvalDimension::authenticity: return "Product Authenticity";
        case EvalDimension::visual_appeal: return "Visual Appeal";
        case EvalDimension::layout_quality: return "Layout Quality";
        case EvalDimension::theme_alignment: return "Theme Alignment";
    }
    return "?";
}

json score_to_json(const EvalScore& s) {
    return {{"generation_id", s.generation_id}, {"dimension", to_string(s.dimension)},
            {"score", s.score},                 {"explanation", s.explanation},
            {"judge_model", s.judge_model},     {"som", s.som},
            {"config", s.config},               {"raw", s.raw}};
}

EvalScore score_from_json(const json& j) {
    EvalScore s;
    s.generation_id = j.value("generation_id", "");
    s.dimension = parse_dimension(j.at("dimension").get<std::string>());
    s.score = j.at("score").get<int>();
    s.explanation = j.value("explanation", "");
    s.judge_model = j.at("judge_model").get<std::string>();
    s.som = j.value("som", false);
    s.config = j.at("config").get<std::string>();
    s.raw = j.value("raw", "");
    return s;
}

void append_scores(const std::filesystem::path& log, const std::vector<EvalScore>& scores) {
    if (log.has_parent_path()) std::filesystem::create_directories(log.parent_path());
    std::ofstream out(log, std::ios::app | std::ios::binary);
    if (!out) throw IoError("cannot append to " + log.string());
    for (const auto& s : scores) out << score_to_json(s).dump() << '\n';
    if (!out) throw IoError("write to " + log.string() + " failed");
}

std::vector<EvalScore> read_scores(const std::filesystem::path& log) {
    std::ifstream in(log);
    if (!in) throw IoError("cannot open " + log.string());
    std::vector<EvalScore> out;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        if (text::trim(line).empty()) continue;
        try {
            out.push_back(score_from_json(json::parse(line)));
        } catch (const std::exception& e) {
            throw InvalidArgument(log.string() + ":" + std::to_string(n) + ": bad score entry: " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Failure labels
// ---------------------------------------------------------------------------

std::string describe(FailureLabel label) {
    switch (label) {
        case FailureLabel::high_quality: return "high-quality";
        case FailureLabel::category_mismatch: return "image/category mismatch";
        case FailureLabel::unnatural_pairing: return "unnatural pairing";
        case FailureLabel::inaccurate_relative_size: return "inaccurate relative size";
        case FailureLabel::unreasonable_placement: return "unreasonable placement";
        case FailureLabel::appearance_changed: return "product appearance changed";
        case FailureLabel::poor_background: return "background poorly featuring products";
    }
    return "?";
}

FailureLabel failure_label_from_int(int value) {
    if (value < 0 || value > 6) throw InvalidArgument("failure label must lie in 0..6 (got " + std::to_string(value) + ")");
    return static_cast<FailureLabel>(value);
}

namespace {

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    return "\"" + text::replace_all(s, "\"", "\"\"") + "\"";
}

std::vector<std::vector<std::string>> parse_csv(std::string_view csv) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < csv.size(); ++i) {
        const char c = csv[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < csv.size() && csv[i + 1] == '"') {
                    field += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field += c;
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < csv.size() && csv[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field += c;
            any = true;
        }
    }
    if (quoted) throw InvalidArgument("unterminated quoted CSV field");
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

std::string write_labels_csv(const std::vector<LabeledGeneration>& rows) {
    std::string out = "generation_id,label,note\n";
    for (const auto& r : rows) {
        out += csv_field(r.generation_id) + "," + std::to_string(static_cast<int>(r.label)) + "," + csv_field(r.note) +
               "\n";
    }
    return out;
}

std::vector<LabeledGeneration> read_labels_csv(std::string_view csv) {
    const auto rows = parse_csv(csv);
    std::vector<LabeledGeneration> out;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        const auto& r = rows[i];
        if (i == 0 && !r.empty() && text::trim(r[0]) == "generation_id") continue;
        if (r.size() < 2) throw InvalidArgument("CSV row " + std::to_string(i + 1) + " needs generation_id,label");
        int value = 0;
        const std::string label = text::trim(r[1]);
        if (label.empty() || label.find_first_not_of("0123456789") != std::string::npos) {
            throw InvalidArgument("CSV row " + std::to_string(i + 1) + ": label '" + label + "' is not an integer");
        }
        value = std::stoi(label);
        out.push_back({text::trim(r[0]), failure_label_from_int(value), r.size() > 2 ? r[2] : std::string()});
    }
    return out;
}

// ---------------------------------------------------------------------------
// Set-of-Mark
// ---------------------------------------------------------------------------

namespace {

void stroke_box(RgbImage& img, const LayoutBox& box, const std::uint8_t (&color)[3]) {
    int left = box.left_px;
    int top = box.top_px;
    int w = std::max(box.width_px, kSomStrokePx);
    int h = std::max(box.height_px, kSomStrokePx);
    const PixelRect r = intersect({left, top, w, h}, {0, 0, img.width(), img.height()});
    if (r.empty()) return;
    for (int y = r.top; y < r.bottom(); ++y) {
        for (int x = r.left; x < r.right(); ++x) {
            const bool edge = x < left + kSomStrokePx || x >= left + w - kSomStrokePx || y < top + kSomStrokePx ||
                              y >= top + h - kSomStrokePx;
            if (!edge) continue;
            std::uint8_t* px = img.at(x, y);
            px[0] = color[0];
            px[1] = color[1];
            px[2] = color[2];
        }
    }
}

}  // namespace

RgbImage annotate_som(const RgbImage& ad, const LayoutBox& box_a, const LayoutBox& box_b) {
    RgbImage out = ad;
    static constexpr std::uint8_t kRed[3] = {255, 0, 0};
    static constexpr std::uint8_t kGreen[3] = {0, 255, 0};
    stroke_box(out, box_a, kRed);
    stroke_box(out, box_b, kGreen);
    return out;
}

std::string config_label(const std::set<Ablation>& ablations) {
    if (ablations.empty()) return "Ours";
    std::string out;
    for (auto a : ablations) out += (out.empty() ? "" : "+") + to_string(a);
    return out;
}

// ---------------------------------------------------------------------------
// Judge
// ---------------------------------------------------------------------------

ChatVisionRequest judge_chat_request(const JudgeRequest& req, bool retry) {
    if (req.product_a.empty() || req.product_b.empty() || req.ad.empty()) {
        throw InvalidArgument("judge needs both product images and the ad image");
    }
    ChatVisionRequest chat;
    chat.system_prompt = prompts::judge_system(judge_asset(req.dimension), req.som);
    if (retry) *chat.system_prompt += " " + std::string(prompts::asset("judge_retry"));
    chat.user_text = text::trim(req.text_prompt).empty() ? std::string("(no text prompt)") : req.text_prompt;
    chat.model_id = req.judge_model;
    chat.images.push_back(encode_png(req.product_a));
    chat.images.push_back(encode_png(req.product_b));
    if (req.som) {
        if (!req.boxes) throw InvalidArgument("SoM judging needs the layout boxes");
        chat.images.push_back(encode_png(annotate_som(req.ad, (*req.boxes)[0], (*req.boxes)[1])));
    } else {
        chat.images.push_back(encode_png(req.ad));
    }
    return chat;
}

namespace {

EvalScore read_verdict(const JudgeRequest& req, const std::string& raw) {
    const json verdict = parse_json_answer(raw);
    const auto it = verdict.find("score");
    if (it == verdict.end()) throw JudgeProtocolViolation("judge reply has no \"score\"", raw);
    if (!it->is_number_integer()) throw JudgeProtocolViolation("judge score is not an integer: " + it->dump(), raw);
    const auto score = it->get<long long>();
    if (score < 1 || score > 5) throw JudgeProtocolViolation("judge score " + std::to_string(score) + " is outside 1..5", raw);
    EvalScore s;
    s.generation_id = req.generation_id;
    s.dimension = req.dimension;
    s.score = static_cast<int>(score);
    const auto ex = verdict.find("explanation");
    s.explanation = ex != verdict.end() && ex->is_string() ? ex->get<std::string>() : std::string();
    s.judge_model = req.judge_model;
    s.som = req.som;
    s.config = req.config;
    s.raw = raw;
    return s;
}

}  // namespace

EvalScore judge(VisionChatBackend& chat, const JudgeRequest& req) {
    const std::string first = chat_vision(chat, judge_chat_request(req, false));
    try {
        return read_verdict(req, first);
    } catch (const JudgeProtocolViolation&) {
    } catch (const UnparseableModelOutput&) {
    }
    const std::string second = chat_vision(chat, judge_chat_request(req, true));
    return read_verdict(req, second);
}

JudgeRequest judge_request_for(const GenerationRecord& record, const Catalog& catalog, const Store& store,
                               EvalDimension dimension, const std::string& judge_model, bool som) {
    if (!record.status.ok) throw InvalidArgument("generation " + record.id + " did not complete; nothing to judge");
    if (!record.pair) throw InvalidArgument("generation " + record.id + " has no product pair");
    JudgeRequest req;
    req.generation_id = record.id;
    req.text_prompt = record.prompts.background;
    req.product_a = catalog.main_image(record.pair->item_a);
    req.product_b = catalog.main_image(record.pair->item_b);
    req.ad = decode_rgb(store.read_artifact(record.artifacts.ad));
    if (record.layout) req.boxes = record.layout->boxes;
    req.dimension = dimension;
    req.judge_model = judge_model;
    req.som = som;
    req.config = config_label(record.ablations);
    return req;
}

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

long long round_mean_milli(long long sum, std::size_t count) {
    if (count == 0) return 0;
    const long long n = static_cast<long long>(count);
    const long long num = 2 * sum * 1000 + n;
    const long long den = 2 * n;
    // Floor division, valid for negative sums too.
    long long q = num / den;
    if ((num % den != 0) && ((num < 0) != (den < 0))) --q;
    return q;
}

std::string TableCell::formatted() const {
    const long long whole = mean_milli / 1000;
    long long frac = mean_milli % 1000;
    if (frac < 0) frac = -frac;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%lld.%03lld", whole, frac);
    return buf;
}

std::string judge_display_name(const std::string& model) {
    std::string out = model;
    if (out.rfind("gpt-", 0) == 0) out.replace(0, 3, "GPT");
    return out;
}

std::string TableRow::label() const { return judge_display_name(judge_model) + (som ? " (SoM)" : ""); }

std::vector<std::string> AblationTable::columns() const {
    std::vector<std::string> cols = {"A1", "A2", "A3", "A4"};
    std::vector<std::string> extra;
    for (const auto& r : rows) {
        for (const auto& [c, cell] : r.cells) {
            if (c != "Ours" && std::find(cols.begin(), cols.end(), c) == cols.end() &&
                std::find(extra.begin(), extra.end(), c) == extra.end()) {
                extra.push_back(c);
            }
        }
    }
    std::sort(extra.begin(), extra.end());
    cols.insert(cols.end(), extra.begin(), extra.end());
    cols.push_back("Ours");
    return cols;
}

const TableCell* AblationTable::cell(const std::string& judge_model, bool som, const std::string& config) const {
    for (const auto& r : rows) {
        if (r.judge_model != judge_model || r.som != som) continue;
        const auto it = r.cells.find(config);
        return it == r.cells.end() ? nullptr : &it->second;
    }
    return nullptr;
}

AblationTable aggregate(const std::vector<EvalScore>& scores, EvalDimension dimension) {
    std::map<std::pair<std::string, bool>, std::map<std::string, TableCell>> acc;
    for (const auto& s : scores) {
        if (s.dimension != dimension) continue;
        TableCell& c = acc[{s.judge_model, s.som}][s.config];
        ++c.count;
        c.sum += s.score;
    }
    AblationTable table;
    table.dimension = dimension;
    for (auto& [key, cells] : acc) {
        TableRow row{key.first, key.second, {}};
        for (auto& [config, c] : cells) {
            c.mean = static_cast<double>(c.sum) / static_cast<double>(c.count);
            c.mean_milli = round_mean_milli(c.sum, c.count);
            row.cells.emplace(config, c);
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

std::string render_markdown(const AblationTable& table) {
    const auto cols = table.columns();
    std::ostringstream out;
    out << "| " << display_name(table.dimension) << " |";
    for (const auto& c : cols) out << ' ' << c << " |";
    out << "\n|---|";
    for (std::size_t i = 0; i < cols.size(); ++i) out << "---|";
    out << '\n';
    for (const auto& r : table.rows) {
        out << "| " << r.label() << " |";
        for (const auto& c : cols) {
            const auto it = r.cells.find(c);
            out << ' ' << (it == r.cells.end() ? std::string() : it->second.formatted() + " (n=" +
                                                                    std::to_string(it->second.count) + ")")
                << " |";
        }
        out << '\n';
    }
    return out.str();
}

std::string render_csv(const AblationTable& table) {
    std::ostringstream out;
    out << "dimension,judge,config,count,sum,mean\n";
    for (const auto& r : table.rows) {
        for (const auto& c : table.columns()) {
            const auto it = r.cells.find(c);
            if (it == r.cells.end()) continue;
            out << to_string(table.dimension) << ',' << csv_field(r.label()) << ',' << c << ',' << it->second.count
                << ',' << it->second.sum << ',' << it->second.formatted() << '\n';
        }
    }
    return out.str();
}

// ---------------------------------------------------------------------------
// Scalar scorers
// ---------------------------------------------------------------------------

void ScorerRegistry::add(std::shared_ptr<ScalarScorer> scorer) {
    if (!scorer) throw InvalidArgument("null scorer");
    scorers_.push_back(std::move(scorer));
}

ScalarScores ScorerRegistry::run(const RgbImage& ad, const std::string& prompt) const {
    ScalarScores out;
    for (const auto& s : scorers_) {
        const std::string key = s->name() + "@" + s->version();
        try {
            out.values[key] = s->score(ad, prompt);
        } catch (const std::exception& e) {
            out.errors[key] = e.what();
        }
    }
    return out;
}

namespace {

std::mutex& scalar_mutex() {
    static std::mutex m;
    return m;
}

json read_scalar_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return json::object();
    json j = json::parse(in, nullptr, false);
    return j.is_object() ? j : json::object();
}

}  // namespace

void attach_scalar_scores(Store& store, const std::string& generation_id, const ScalarScores& scores) {
    if (!store.record(generation_id)) throw UnknownGeneration("no generation " + generation_id);
    const auto path = store.root() / "scalar_scores.json";
    std::lock_guard lock(scalar_mutex());
    json all = read_scalar_file(path);
    json& entry = all[generation_id];
    if (!entry.is_object()) entry = json::object();
    for (const auto& [k, v] : scores.values) entry[k] = v;
    const std::string body = all.dump(1) + "\n";
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

std::map<std::string, double> scalar_scores_of(const Store& store, const std::string& generation_id) {
    std::lock_guard lock(scalar_mutex());
    const json all = read_scalar_file(store.root() / "scalar_scores.json");
    std::map<std::string, double> out;
    const auto it = all.find(generation_id);
    if (it == all.end()) return out;
    for (const auto& [k, v] : it->items()) out[k] = v.get<double>();
    return out;
}

}  // namespace adgen
