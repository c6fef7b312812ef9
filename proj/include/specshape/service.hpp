#pragma once

// HTTP API behind the rule-authoring workbench.
//
//   GET  /api/meta                       cube dimensions, axis, classes
//   GET  /api/spectrum?x&y               raw + continuum-removed values
//   GET  /api/features?x&y[&threshold]   curvature series and feature points
//   POST /api/rules/validate             rule text -> diagnostics
//   POST /api/rules/preview[?downsample] rule text -> label map + counts
//   GET  /api/labels.png                 last preview image
//
// x is the column, y the row. Responses are JSON except the PNG. Errors:
// 400 malformed query, 404 pixel out of range, 422 rule diagnostics, 409 a
// preview superseded by a newer one.

#include <httplib.h>
#include <json.hpp>

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <stop_token>
#include <string>

#include "envi.hpp"
#include "label_map.hpp"
#include "pipeline.hpp"
#include "rule_engine.hpp"
#include "rules.hpp"

namespace specshape::service {

using json = nlohmann::json;

inline std::string base64_encode(std::string_view in) {
    static constexpr char table[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((in.size() + 2) / 3 * 4);
    std::size_t i = 0;
    for (; i + 2 < in.size(); i += 3) {
        const unsigned v = (unsigned char)in[i] << 16 | (unsigned char)in[i + 1] << 8 | (unsigned char)in[i + 2];
        out += table[v >> 18 & 63];
        out += table[v >> 12 & 63];
        out += table[v >> 6 & 63];
        out += table[v & 63];
    }
    if (i + 1 == in.size()) {
        const unsigned v = (unsigned char)in[i] << 16;
        out += table[v >> 18 & 63];
        out += table[v >> 12 & 63];
        out += "==";
    } else if (i + 2 == in.size()) {
        const unsigned v = (unsigned char)in[i] << 16 | (unsigned char)in[i + 1] << 8;
        out += table[v >> 18 & 63];
        out += table[v >> 12 & 63];
        out += table[v >> 6 & 63];
        out += '=';
    }
    return out;
}

inline json to_json(const rules::Diagnostic& d) {
    return {{"kind", rules::to_string(d.kind)},
            {"line", d.location.line},
            {"column", d.location.column},
            {"message", d.message}};
}

inline json to_json(const ClassTable& t) {
    json arr = json::array();
    for (const auto& [id, info] : t) arr.push_back({{"id", id}, {"name", info.name}, {"color", format_color(info.color)}});
    return arr;
}

struct PreviewResult {
    LabelMap map;
    std::string png;
    std::size_t downsample = 1;
};

class Workbench {
public:
    Workbench(SpectralCube cube, PipelineConfig cfg, std::optional<rules::RuleSet> rules = {})
        : cube_(std::move(cube)), cfg_(cfg), rules_(std::move(rules)) {
        cfg_.validate(cube_.bands());
    }

    const SpectralCube& cube() const { return cube_; }
    const PipelineConfig& config() const { return cfg_; }

    /// Default preview stride when the request names none.
    std::size_t default_downsample = 4;

    void install(httplib::Server& server) {
        server.set_exception_handler([](const httplib::Request&, httplib::Response& res, std::exception_ptr ep) {
            try {
                std::rethrow_exception(ep);
            } catch (const ConfigError& e) {
                error(res, 400, e.what());
            } catch (const std::exception& e) {
                error(res, 500, e.what());
            }
        });
        server.Get("/api/meta", [this](const httplib::Request&, httplib::Response& res) { meta(res); });
        server.Get("/api/spectrum", [this](const httplib::Request& req, httplib::Response& res) { spectrum(req, res); });
        server.Get("/api/features", [this](const httplib::Request& req, httplib::Response& res) { features(req, res); });
        server.Post("/api/rules/validate",
                    [this](const httplib::Request& req, httplib::Response& res) { validate(req, res); });
        server.Post("/api/rules/preview",
                    [this](const httplib::Request& req, httplib::Response& res) { preview(req, res); });
        server.Get("/api/labels.png", [this](const httplib::Request&, httplib::Response& res) { labels_png(res); });
    }

    std::optional<PreviewResult> last_preview() const {
        std::lock_guard lock(mutex_);
        if (!last_) return std::nullopt;
        return *last_;
    }

private:
    static void reply(httplib::Response& res, int status, const json& body) {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void error(httplib::Response& res, int status, const std::string& msg) {
        reply(res, status, {{"error", msg}});
    }

    static std::optional<long long> int_param(const httplib::Request& req, const char* name) {
        if (!req.has_param(name)) return std::nullopt;
        const std::string v = req.get_param_value(name);
        long long out = 0;
        const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
        if (ec != std::errc() || p != v.data() + v.size()) return std::nullopt;
        return out;
    }

    // Returns false (and fills `res`) when x/y are missing, malformed or outside the cube.
    bool pixel_param(const httplib::Request& req, httplib::Response& res, std::size_t& row, std::size_t& col) const {
        if (!req.has_param("x") || !req.has_param("y")) {
            error(res, 400, "query parameters x and y are required");
            return false;
        }
        const auto x = int_param(req, "x"), y = int_param(req, "y");
        if (!x || !y) {
            error(res, 400, "x and y must be integers");
            return false;
        }
        if (*x < 0 || *y < 0 || std::size_t(*x) >= cube_.cols() || std::size_t(*y) >= cube_.rows()) {
            error(res, 404, "pixel (" + std::to_string(*x) + ", " + std::to_string(*y) + ") is outside the " +
                                std::to_string(cube_.cols()) + "x" + std::to_string(cube_.rows()) + " cube");
            return false;
        }
        row = std::size_t(*y);
        col = std::size_t(*x);
        return true;
    }

    void meta(httplib::Response& res) const {
        json classes = json::array();
        if (rules_)
            for (std::size_t i = 0; i < rules_->rules.size(); ++i)
                classes.push_back({{"id", i + 1},
                                   {"name", rules_->rules[i].class_name},
                                   {"color", format_color(default_class_color(ClassId(i + 1)))}});
        reply(res, 200,
              {{"rows", cube_.rows()},
               {"cols", cube_.cols()},
               {"bands", cube_.bands()},
               {"wavelengths", std::vector<double>(cube_.wavelengths().begin(), cube_.wavelengths().end())},
               {"valid_pixels", cube_.valid_count()},
               {"classes", classes},
               {"config",
                {{"smooth_window", cfg_.smooth_window},
                 {"smooth_order", cfg_.smooth_order},
                 {"continuum_mode", to_string(cfg_.continuum_mode)},
                 {"threshold", cfg_.threshold},
                 {"bind_tolerance_nm", cfg_.bind_tolerance_nm},
                 {"x_scale", cfg_.x_scale}}}});
    }

    void spectrum(const httplib::Request& req, httplib::Response& res) const {
        std::size_t row, col;
        if (!pixel_param(req, res, row, col)) return;
        const auto a = analyze_spectrum(pixel_spectrum(cube_, row, col), cfg_);
        reply(res, 200,
              {{"x", col},
               {"y", row},
               {"valid", cube_.is_valid(row, col) && a.valid},
               {"wavelengths", a.raw.wavelengths},
               {"raw", a.raw.values},
               {"smoothed", a.smoothed.values},
               {"continuum_removed", a.continuum_removed.values},
               {"continuum_mode", to_string(cfg_.continuum_mode)}});
    }

    void features(const httplib::Request& req, httplib::Response& res) const {
        std::size_t row, col;
        if (!pixel_param(req, res, row, col)) return;
        PipelineConfig cfg = cfg_;
        if (req.has_param("threshold")) {
            const std::string v = req.get_param_value("threshold");
            double t = 0;
            const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), t);
            if (ec != std::errc() || p != v.data() + v.size() || !(t > 0.0))
                return error(res, 400, "threshold must be a positive number");
            cfg.threshold = t;
        }
        const auto a = analyze_spectrum(pixel_spectrum(cube_, row, col), cfg);
        json points = json::array();
        for (const auto& p : a.features.points)
            points.push_back({{"band", p.band},
                              {"wavelength_nm", p.wavelength},
                              {"kappa", p.kappa},
                              {"direction", to_string(p.direction)},
                              {"significant", p.is_significant}});
        reply(res, 200,
              {{"x", col},
               {"y", row},
               {"threshold", cfg.threshold},
               {"x_scale", cfg.x_scale},
               {"kappa", a.features.curvature.kappa},
               {"points", points}});
    }

    // Parse + bind; diagnostics in `diags` when either fails. Text without
    // any rule is an empty set: every pixel previews as background.
    std::optional<rules::CompiledRuleSet> compile(const std::string& text, std::vector<rules::Diagnostic>& diags,
                                                  rules::RuleSet* parsed = nullptr) const {
        auto pr = rules::check_rules(text, true);
        if (!pr.ok()) {
            diags = std::move(pr.diagnostics);
            return std::nullopt;
        }
        try {
            auto crs = rules::bind(pr.rules, cube_.wavelengths(), cfg_.bind_options());
            if (parsed) *parsed = std::move(pr.rules);
            return crs;
        } catch (const rules::RuleError& e) {
            diags = e.diagnostics();
            return std::nullopt;
        }
    }

    static json diagnostics_json(const std::vector<rules::Diagnostic>& diags) {
        json arr = json::array();
        for (const auto& d : diags) arr.push_back(to_json(d));
        return arr;
    }

    void validate(const httplib::Request& req, httplib::Response& res) const {
        std::vector<rules::Diagnostic> diags;
        rules::RuleSet rs;
        const auto crs = compile(req.body, diags, &rs);
        if (!crs) return reply(res, 422, {{"ok", false}, {"diagnostics", diagnostics_json(diags)}});
        json summary = json::array();
        for (const auto& r : rs.rules) summary.push_back({{"class", r.class_name}, {"atoms", r.expr.atom_count()}});
        reply(res, 200, {{"ok", true}, {"diagnostics", json::array()}, {"rules", summary}});
    }

    void preview(const httplib::Request& req, httplib::Response& res) {
        std::size_t stride = default_downsample;
        if (req.has_param("downsample")) {
            const auto d = int_param(req, "downsample");
            if (!d || *d < 1) return error(res, 400, "downsample must be a positive integer");
            stride = std::size_t(*d);
        }
        std::vector<rules::Diagnostic> diags;
        const auto crs = compile(req.body, diags);
        if (!crs) return reply(res, 422, {{"ok", false}, {"diagnostics", diagnostics_json(diags)}});

        // Latest request wins: a newer preview stops this one.
        std::stop_token token;
        std::uint64_t generation;
        {
            std::lock_guard lock(mutex_);
            generation = ++generation_;
            if (running_) running_->request_stop();
            running_ = std::make_shared<std::stop_source>();
            token = running_->get_token();
        }
        LabelMap map;
        try {
            map = classify_cube(cube_, *crs, cfg_, {stride, token});
        } catch (const Cancelled&) {
            return error(res, 409, "superseded by a newer preview request");
        }
        PreviewResult result{map, encode_label_png(map), stride};
        json counts = json::object();
        for (const auto& [id, n] : map.counts()) counts[std::to_string(id)] = n;
        json body = {{"ok", true},
                     {"rows", map.rows},
                     {"cols", map.cols},
                     {"downsample", stride},
                     {"counts", counts},
                     {"classes", to_json(map.class_table)},
                     {"png_base64", base64_encode(result.png)}};
        {
            std::lock_guard lock(mutex_);
            if (generation == generation_) last_ = std::move(result);
        }
        reply(res, 200, body);
    }

    void labels_png(httplib::Response& res) const {
        std::lock_guard lock(mutex_);
        if (!last_) return error(res, 404, "no preview has been computed yet");
        res.status = 200;
        res.set_content(last_->png, "image/png");
    }

    SpectralCube cube_;
    PipelineConfig cfg_;
    std::optional<rules::RuleSet> rules_;
    mutable std::mutex mutex_;
    std::uint64_t generation_ = 0;
    std::shared_ptr<std::stop_source> running_;
    std::optional<PreviewResult> last_;
};

}  // namespace specshape::service
