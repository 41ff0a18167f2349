#include "adgen/pairing.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <mutex>
#include <random>
#include <regex>
#include <set>

#include "adgen/errors.hpp"
#include "adgen/json_answer.hpp"
#include "adgen/prompts.hpp"
#include "adgen/text.hpp"

namespace adgen {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Profiles
// ---------------------------------------------------------------------------

json profile_to_json(const ProductProfile& p) {
    json j = {{"item_id", p.item_id},
              {"category_match", p.category_match},
              {"short_description", p.short_description},
              {"room_type", to_string(p.room_type)}};
    j["dims_cm"] = p.dims_cm ? json::array({p.dims_cm->length, p.dims_cm->width, p.dims_cm->height}) : json(nullptr);
    return j;
}

ProductProfile profile_from_json(const json& j) {
    ProductProfile p;
    p.item_id = j.at("item_id").get<std::string>();
    p.category_match = j.value("category_match", true);
    p.short_description = j.at("short_description").get<std::string>();
    p.room_type = parse_room_type(j.at("room_type").get<std::string>());
    if (j.contains("dims_cm") && j["dims_cm"].is_array() && j["dims_cm"].size() == 3) {
        p.dims_cm = Dimensions{j["dims_cm"][0].get<double>(), j["dims_cm"][1].get<double>(), j["dims_cm"][2].get<double>()};
    }
    return p;
}

void save_profiles(const std::map<std::string, ProductProfile>& profiles, const std::filesystem::path& path) {
    json j = json::object();
    for (const auto& [id, p] : profiles) j[id] = profile_to_json(p);
    const std::string body = j.dump(1) + "\n";
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

std::map<std::string, ProductProfile> load_profiles(const std::filesystem::path& path) {
    std::map<std::string, ProductProfile> out;
    std::ifstream in(path);
    if (!in) return out;
    const json j = json::parse(in);
    for (const auto& [id, p] : j.items()) out.emplace(id, profile_from_json(p));
    return out;
}

std::optional<Dimensions> parse_dimensions(std::string_view answer) {
    static const std::regex kNumber(R"((\d+(?:\.\d+)?))");
    const std::string s(answer);
    std::vector<double> nums;
    for (auto it = std::sregex_iterator(s.begin(), s.end(), kNumber); it != std::sregex_iterator() && nums.size() < 3;
         ++it) {
        nums.push_back(std::stod((*it)[1].str()));
    }
    if (nums.size() < 3) return std::nullopt;
    const std::string l = text::lower(s);
    static const std::regex kMetres(R"((\d|\s)(m|meters?|metres?)\b)");
    double scale = 1.0;
    if (l.find("mm") != std::string::npos || l.find("millimet") != std::string::npos) {
        scale = 0.1;
    } else if (l.find("cm") != std::string::npos || l.find("centimet") != std::string::npos) {
        scale = 1.0;
    } else if (l.find("inch") != std::string::npos || l.find('"') != std::string::npos ||
               std::regex_search(l, std::regex(R"(\d\s*in\b)"))) {
        scale = 2.54;
    } else if (std::regex_search(l, kMetres)) {
        scale = 100.0;
    }
    Dimensions d{nums[0] * scale, nums[1] * scale, nums[2] * scale};
    for (double v : {d.length, d.width, d.height}) {
        if (!(v > 0.0 && v < 1000.0)) return std::nullopt;
    }
    return d;
}

namespace {

std::string answer_text(const json& answers, const std::string& key, const std::string& raw) {
    const auto it = answers.find(key);
    if (it == answers.end()) throw UnparseableModelOutput("model answer lacks key \"" + key + "\"", raw);
    if (it->is_string()) return text::trim(it->get<std::string>());
    if (it->is_number()) return it->dump();
    throw UnparseableModelOutput("model answer \"" + key + "\" is not text", raw);
}

}  // namespace

ProductProfile profile_product(VisionChatBackend& chat, const ProductRecord& record, const RgbImage& image,
                               std::string_view category, const std::string& model_id) {
    if (text::trim(category).empty()) throw InvalidArgument("profile_product needs a category");
    if (image.empty()) throw InvalidArgument("profile_product needs a decoded image");
    ChatVisionRequest req;
    req.user_text = prompts::profile_product(record.title, category);
    req.images.push_back(encode_png(image));
    req.model_id = model_id;
    const std::string raw = chat_vision(chat, req);
    const json answers = parse_json_answer(raw);

    ProductProfile p;
    p.item_id = record.item_id;
    const std::string match = text::lower(answer_text(answers, "1", raw));
    p.category_match = !match.starts_with("no");
    if (!p.category_match) {
        throw ProfileRejected("product " + record.item_id + " does not match category '" + std::string(category) + "'");
    }
    p.short_description = text::truncate_words(answer_text(answers, "2", raw), 3);
    p.dims_cm = parse_dimensions(answer_text(answers, "3", raw));
    const auto room = normalize_room_answer(answer_text(answers, "4", raw));
    if (!room) throw UnparseableModelOutput("room type answer is not one of the four room types", raw);
    p.room_type = *room;
    return p;
}

// ---------------------------------------------------------------------------
// Geometry
// ---------------------------------------------------------------------------

PointCloud backproject_floor(const DepthMap& depth, const SegmentationMask& floor_mask,
                             const CameraIntrinsics& k, std::size_t max_points, std::uint64_t seed) {
    if (depth.width != floor_mask.width() || depth.height != floor_mask.height()) {
        throw InvalidArgument("depth map and floor mask dimensions differ");
    }
    std::vector<std::size_t> usable;
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            if (floor_mask.get(u, v) && depth.is_valid(u, v)) usable.push_back(static_cast<std::size_t>(v) * depth.width + u);
        }
    }
    if (usable.size() < kMinFloorPixels) {
        throw TooFewFloorPixels("only " + std::to_string(usable.size()) + " usable floor pixels (need 200)");
    }
    if (usable.size() > max_points) {
        std::vector<std::size_t> picked;
        picked.reserve(max_points);
        std::mt19937_64 rng(seed);
        std::sample(usable.begin(), usable.end(), std::back_inserter(picked), max_points, rng);
        usable.swap(picked);
    }
    PointCloud points;
    points.reserve(usable.size());
    for (std::size_t i : usable) {
        const int u = static_cast<int>(i % depth.width);
        const int v = static_cast<int>(i / depth.width);
        const double d = depth.values[i];
        points.emplace_back(d * (u - k.cx) / k.fx, d * (v - k.cy) / k.fy, d);
    }
    return points;
}

namespace {

void orient_up(PlaneFit& fit) {
    if (fit.normal.y() > 0.0) {
        fit.normal = -fit.normal;
        fit.offset = -fit.offset;
    }
}

Eigen::Matrix3d covariance(std::span<const Vec3> points, const Vec3& centroid) {
    Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
    for (const auto& p : points) {
        const Vec3 q = p - centroid;
        cov.noalias() += q * q.transpose();
    }
    return cov / static_cast<double>(points.size());
}

}  // namespace

PlaneFit least_squares_plane(std::span<const Vec3> points) {
    if (points.size() < 3) throw DegenerateGeometry("plane fit needs at least 3 points");
    Vec3 centroid = Vec3::Zero();
    for (const auto& p : points) centroid += p;
    centroid /= static_cast<double>(points.size());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance(points, centroid));
    PlaneFit fit;
    fit.normal = solver.eigenvectors().col(0).normalized();  // eigenvalues ascend
    fit.offset = -fit.normal.dot(centroid);
    fit.inlier_count = points.size();
    fit.inlier_ratio = 1.0;
    orient_up(fit);
    return fit;
}

PlaneFit fit_floor_plane(const PointCloud& points, const RansacParams& params) {
    const std::size_t n = points.size();
    if (n < 3) throw DegenerateGeometry("plane fit needs at least 3 points");
    {
        Vec3 centroid = Vec3::Zero();
        for (const auto& p : points) centroid += p;
        centroid /= static_cast<double>(n);
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(covariance(points, centroid), Eigen::EigenvaluesOnly);
        const auto ev = solver.eigenvalues();
        if (ev(2) <= 0.0 || ev(1) <= 1e-12 * ev(2)) throw DegenerateGeometry("points are collinear or coincident");
    }

    std::mt19937_64 rng(params.seed);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::size_t best_count = 0;
    Vec3 best_normal = Vec3::Zero();
    double best_offset = 0.0;
    for (int it = 0; it < params.iterations; ++it) {
        const std::size_t i = pick(rng);
        const std::size_t j = pick(rng);
        const std::size_t k = pick(rng);
        if (i == j || j == k || i == k) continue;
        Vec3 normal = (points[j] - points[i]).cross(points[k] - points[i]);
        const double len = normal.norm();
        if (len < 1e-12) continue;
        normal /= len;
        const double offset = -normal.dot(points[i]);
        std::size_t count = 0;
        for (const auto& p : points) {
            if (std::abs(normal.dot(p) + offset) <= params.inlier_dist_m) ++count;
        }
        if (count > best_count) {
            best_count = count;
            best_normal = normal;
            best_offset = offset;
        }
    }
    if (best_count < 3) throw DegenerateGeometry("RANSAC found no supported plane");

    auto collect = [&](const Vec3& normal, double offset) {
        std::vector<Vec3> inliers;
        inliers.reserve(n);
        for (const auto& p : points) {
            if (std::abs(normal.dot(p) + offset) <= params.inlier_dist_m) inliers.push_back(p);
        }
        return inliers;
    };
    std::vector<Vec3> inliers = collect(best_normal, best_offset);
    PlaneFit fit = least_squares_plane(inliers);
    // One refinement round: re-select inliers against the refit plane.
    std::vector<Vec3> refined = collect(fit.normal, fit.offset);
    if (refined.size() >= 3) {
        fit = least_squares_plane(refined);
        inliers.swap(refined);
    }
    fit.inlier_count = inliers.size();
    fit.inlier_ratio = static_cast<double>(inliers.size()) / static_cast<double>(n);
    if (fit.inlier_ratio < params.min_inlier_ratio) {
        throw DegenerateGeometry("best plane explains only " + text::format_fixed(100.0 * fit.inlier_ratio, 1) +
                                 "% of floor points");
    }
    return fit;
}

TiltEstimate camera_tilt(const PlaneFit& plane) {
    const Vec3 up(0.0, -1.0, 0.0);
    const double c = std::clamp(plane.normal.normalized().dot(up), -1.0, 1.0);
    return TiltEstimate{rad_to_deg(std::acos(c)), plane, plane.inlier_ratio};
}

ViewpointComparison viewpoint_compatible(const TiltEstimate& a, const TiltEstimate& b, double threshold_deg) {
    ViewpointComparison out;
    out.angle_diff_deg = std::abs(a.tilt_deg - b.tilt_deg);
    out.compatible = out.angle_diff_deg <= threshold_deg;
    const double c = std::clamp(a.plane.normal.normalized().dot(b.plane.normal.normalized()), -1.0, 1.0);
    out.normal_angle_deg = rad_to_deg(std::acos(c));
    return out;
}

bool has_white_background(const RgbImage& image, double fraction, int threshold) {
    std::size_t total = 0;
    std::size_t white = 0;
    auto visit = [&](int x, int y) {
        const std::uint8_t* px = image.at(x, y);
        ++total;
        if (px[0] >= threshold && px[1] >= threshold && px[2] >= threshold) ++white;
    };
    for (int x = 0; x < image.width(); ++x) {
        visit(x, 0);
        if (image.height() > 1) visit(x, image.height() - 1);
    }
    for (int y = 1; y + 1 < image.height(); ++y) {
        visit(0, y);
        if (image.width() > 1) visit(image.width() - 1, y);
    }
    return total > 0 && static_cast<double>(white) >= fraction * static_cast<double>(total);
}

SegmentationMask floor_mask_for(const RgbImage& image, SegmentationBackend& segmenter, const TiltOptions& options) {
    if (!has_white_background(image, options.white_border_fraction)) return segment(segmenter, image, "floor");
    const SegmentationMask product = segment(segmenter, image, "product");
    int top = image.height();
    int bottom = -1;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (product.get(x, y)) {
                top = std::min(top, y);
                bottom = std::max(bottom, y);
                break;
            }
        }
    }
    SegmentationMask band(image.width(), image.height());
    if (bottom < 0) return band;
    const int rows = bottom - top + 1;
    const int band_rows = std::max(1, static_cast<int>(std::ceil(options.contact_band_fraction * rows)));
    for (int y = bottom - band_rows + 1; y <= bottom; ++y) {
        for (int x = 0; x < image.width(); ++x) band.set(x, y, product.get(x, y));
    }
    return band;
}

TiltEstimate estimate_product_tilt(const RgbImage& image, const ModelGateway& gateway, const TiltOptions& options) {
    const DepthMap depth = estimate_depth(*gateway.depth, image);
    const SegmentationMask floor = floor_mask_for(image, *gateway.segmenter, options);
    const CameraIntrinsics k = intrinsics_from_fov(image.width(), image.height(), options.hfov_deg);
    const PointCloud points = backproject_floor(depth, floor, k, options.max_points, options.ransac.seed);
    return camera_tilt(fit_floor_plane(points, options.ransac));
}

// ---------------------------------------------------------------------------
// Tilt cache
// ---------------------------------------------------------------------------

CachedTiltSource::CachedTiltSource(const Catalog& catalog, ModelGateway gateway, TiltOptions options)
    : catalog_(catalog), gateway_(std::move(gateway)), options_(std::move(options)) {}

TiltLookup CachedTiltSource::tilt(const std::string& item_id) {
    {
        std::shared_lock lock(mutex_);
        if (const auto it = cache_.find(item_id); it != cache_.end()) return it->second;
    }
    TiltLookup result;
    try {
        result.estimate = estimate_product_tilt(catalog_.main_image(item_id), gateway_, options_);
    } catch (const TooFewFloorPixels& e) {
        result.failure = std::string("TooFewFloorPixels: ") + e.what();
    } catch (const DegenerateGeometry& e) {
        result.failure = std::string("DegenerateGeometry: ") + e.what();
    } catch (const IoError& e) {
        result.failure = std::string("IoError: ") + e.what();
    } catch (const ImageDecodeError& e) {
        result.failure = std::string("ImageDecodeError: ") + e.what();
    }
    std::unique_lock lock(mutex_);
    return cache_.emplace(item_id, std::move(result)).first->second;
}

std::size_t CachedTiltSource::size() const {
    std::shared_lock lock(mutex_);
    return cache_.size();
}

void CachedTiltSource::save(const std::filesystem::path& path) const {
    json j = json::object();
    {
        std::shared_lock lock(mutex_);
        for (const auto& [id, t] : cache_) {
            if (t.estimate) {
                const auto& p = t.estimate->plane;
                j[id] = {{"tilt_deg", t.estimate->tilt_deg},
                         {"normal", {p.normal.x(), p.normal.y(), p.normal.z()}},
                         {"offset", p.offset},
                         {"inlier_ratio", p.inlier_ratio},
                         {"inlier_count", p.inlier_count}};
            } else {
                j[id] = {{"error", t.failure}};
            }
        }
    }
    const std::string body = j.dump(1) + "\n";
    write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(body.data()), body.size()));
}

void CachedTiltSource::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) return;
    const json j = json::parse(in);
    std::unique_lock lock(mutex_);
    for (const auto& [id, v] : j.items()) {
        TiltLookup t;
        if (v.contains("error")) {
            t.failure = v["error"].get<std::string>();
        } else {
            TiltEstimate e;
            e.tilt_deg = v.at("tilt_deg").get<double>();
            const auto n = v.at("normal").get<std::vector<double>>();
            e.plane.normal = Vec3(n.at(0), n.at(1), n.at(2));
            e.plane.offset = v.at("offset").get<double>();
            e.plane.inlier_ratio = v.at("inlier_ratio").get<double>();
            e.plane.inlier_count = v.at("inlier_count").get<std::size_t>();
            e.quality = e.plane.inlier_ratio;
            t.estimate = e;
        }
        cache_[id] = std::move(t);
    }
}

// ---------------------------------------------------------------------------
// Pair sampling
// ---------------------------------------------------------------------------

json pair_to_json(const PairCandidate& p) {
    return {{"item_a", p.item_a},
            {"item_b", p.item_b},
            {"angle_diff_deg", p.angle_diff_deg},
            {"compatible", p.compatible},
            {"room_type", to_string(p.room_type)}};
}

PairCandidate pair_from_json(const json& j) {
    PairCandidate p;
    p.item_a = j.at("item_a").get<std::string>();
    p.item_b = j.at("item_b").get<std::string>();
    p.angle_diff_deg = j.at("angle_diff_deg").get<double>();
    p.compatible = j.at("compatible").get<bool>();
    p.room_type = parse_room_type(j.at("room_type").get<std::string>());
    return p;
}

std::vector<std::string> room_members(const Catalog& catalog, const std::map<std::string, ProductProfile>& profiles,
                                      RoomType room, std::string_view category) {
    std::vector<std::string> out;
    const auto it = catalog.category_index.find(normalize_category(category));
    if (it == catalog.category_index.end()) return out;
    for (const auto& id : it->second) {
        const auto p = profiles.find(id);
        if (p != profiles.end() && p->second.room_type == room) out.push_back(id);
    }
    return out;
}

PairingResult pair_candidates(const Catalog& catalog, const std::map<std::string, ProductProfile>& profiles,
                              RoomType room, std::string_view category_a, std::string_view category_b,
                              double threshold_deg, std::size_t count, std::uint64_t seed, TiltSource& tilts) {
    const auto members_a = room_members(catalog, profiles, room, category_a);
    const auto members_b = room_members(catalog, profiles, room, category_b);
    for (const auto& [name, members] : {std::pair{category_a, &members_a}, std::pair{category_b, &members_b}}) {
        if (members->empty()) {
            throw UnknownCategory("category '" + std::string(name) + "' has no product profiled for " + to_string(room));
        }
    }

    std::set<std::pair<std::string, std::string>> unique;
    for (const auto& a : members_a) {
        for (const auto& b : members_b) {
            if (a == b) continue;
            unique.emplace(std::min(a, b), std::max(a, b));
        }
    }
    std::vector<std::pair<std::string, std::string>> order(unique.begin(), unique.end());
    std::mt19937_64 rng(seed);
    std::shuffle(order.begin(), order.end(), rng);

    PairingResult result;
    for (const auto& [a, b] : order) {
        if (result.pairs.size() >= count) break;
        const auto& pa = profiles.at(a);
        const auto& pb = profiles.at(b);
        if (pa.room_type != pb.room_type || pa.room_type != room) {
            result.rejects.push_back({a, b, "room types disagree"});
            continue;
        }
        const TiltLookup ta = tilts.tilt(a);
        const TiltLookup tb = tilts.tilt(b);
        if (!ta.estimate || !tb.estimate) {
            const std::string why = !ta.estimate ? a + ": " + ta.failure : b + ": " + tb.failure;
            result.rejects.push_back({a, b, "incompatible by default (tilt unavailable, " + why + ")"});
            continue;
        }
        const ViewpointComparison cmp = viewpoint_compatible(*ta.estimate, *tb.estimate, threshold_deg);
        if (!cmp.compatible) {
            result.rejects.push_back({a, b, "viewpoint mismatch: tilt differs by " + text::format_fixed(cmp.angle_diff_deg, 2) +
                                                " deg (threshold " + text::format_fixed(threshold_deg, 2) + ")"});
            continue;
        }
        result.pairs.push_back(PairCandidate{a, b, cmp.angle_diff_deg, true, room});
    }
    if (result.pairs.empty()) {
        throw NoCompatiblePairs("all " + std::to_string(result.rejects.size()) + " candidate pairs between '" +
                                std::string(category_a) + "' and '" + std::string(category_b) + "' were rejected" +
                                (result.rejects.empty() ? "" : " (first: " + result.rejects.front().reason + ")"));
    }
    return result;
}

}  // namespace adgen
