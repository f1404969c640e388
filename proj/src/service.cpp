#include "axloc/service.hpp"

#include "axloc/errors.hpp"
#include "axloc/localize.hpp"
#include "axloc/version.hpp"

#include <cmath>

#include "httplib.h"
#include "json.hpp"

namespace axloc {

namespace {

using nlohmann::json;

HttpReply error_reply(int status, const std::string& message)
{
    return {status, json{{"error", message}}.dump()};
}

std::size_t require_index(const json& v, const std::string& what)
{
    if (!(v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0)))
        throw ArgumentError(what + " must be a non-negative integer");
    return v.get<std::size_t>();
}

double require_number(const json& v, const std::string& what)
{
    if (!v.is_number())
        throw ArgumentError(what + " must be a number");
    return v.get<double>();
}

} // namespace

LocalizationService::LocalizationService(Settings settings, LandmarkTable landmarks)
    : settings_(std::move(settings)), landmarks_(std::move(landmarks))
{
    settings_.validate();
}

HttpReply LocalizationService::localize(const std::string& body) const
{
    json request;
    try {
        request = json::parse(body);
    } catch (const json::exception& e) {
        return error_reply(400, std::string("malformed JSON: ") + e.what());
    }

    LocalizeOutcome outcome;
    try {
        if (!request.is_object())
            throw ArgumentError("request body must be a JSON object");
        if (!request.contains("predictions"))
            throw ArgumentError("missing field 'predictions'");
        if (!request.contains("meta"))
            throw ArgumentError("missing field 'meta'");
        const auto& preds = request["predictions"];
        if (!preds.is_array() || preds.empty())
            throw ArgumentError("'predictions' must be a non-empty array");
        const auto& meta_json = request["meta"];
        if (!meta_json.is_object() || !meta_json.contains("num_slices"))
            throw ArgumentError("'meta.num_slices' is required");

        const std::size_t num_slices = require_index(meta_json["num_slices"], "meta.num_slices");
        ScanMetadata meta;
        if (meta_json.contains("spacing_between_slices_mm") && !meta_json["spacing_between_slices_mm"].is_null()) {
            const double spacing = require_number(meta_json["spacing_between_slices_mm"], "meta.spacing_between_slices_mm");
            if (!(spacing > 0.0))
                throw ArgumentError("meta.spacing_between_slices_mm must be positive");
            meta.spacing_between_slices_mm = spacing;
        }
        if (meta_json.contains("pixel_spacing_mm") && !meta_json["pixel_spacing_mm"].is_null()) {
            const auto& px = meta_json["pixel_spacing_mm"];
            if (!px.is_array() || px.size() != 2)
                throw ArgumentError("meta.pixel_spacing_mm must be [row, col]");
            meta.pixel_spacing_mm = std::array<double, 2>{require_number(px[0], "meta.pixel_spacing_mm[0]"),
                                                          require_number(px[1], "meta.pixel_spacing_mm[1]")};
        }
        if (meta_json.contains("orientation") && !meta_json["orientation"].is_null()) {
            if (!meta_json["orientation"].is_string())
                throw ArgumentError("meta.orientation must be a string");
            meta.orientation = parse_orientation(meta_json["orientation"].get<std::string>());
        }

        std::vector<SlicePrediction> predictions;
        predictions.reserve(preds.size());
        for (std::size_t k = 0; k < preds.size(); ++k) {
            const auto& p = preds[k];
            const std::string where = "predictions[" + std::to_string(k) + "]";
            if (!p.is_object() || !p.contains("index") || !p.contains("position"))
                throw ArgumentError(where + " must be {\"index\", \"position\"}");
            predictions.push_back({require_index(p["index"], where + ".index"),
                                   require_number(p["position"], where + ".position")});
        }

        Settings settings = settings_;
        if (request.contains("config"))
            apply_fit_overrides(settings, request["config"]);
        settings.validate();

        outcome = localize_from_predictions(predictions, num_slices, meta, settings);
    } catch (const Error& e) {
        return error_reply(400, e.what());
    } catch (const json::exception& e) {
        return error_reply(400, e.what());
    }

    try {
        const json response = to_json(outcome, landmarks_, false);
        return {outcome.verdict.accepted ? 200 : 422, response.dump()};
    } catch (const std::exception& e) {
        return error_reply(500, e.what());
    }
}

HttpReply LocalizationService::landmarks() const
{
    return {200, landmarks_.to_json().dump()};
}

HttpReply LocalizationService::health() const
{
    return {200, json{{"status", "ok"}, {"version", kVersion}}.dump()};
}

struct HttpServer::Impl {
    const LocalizationService& service;
    httplib::Server server;

    explicit Impl(const LocalizationService& s) : service(s)
    {
        auto send = [](httplib::Response& res, const HttpReply& reply) {
            res.status = reply.status;
            res.set_content(reply.body, reply.content_type);
        };
        server.Post("/v1/localize", [this, send](const httplib::Request& req, httplib::Response& res) {
            send(res, service.localize(req.body));
        });
        server.Get("/v1/landmarks", [this, send](const httplib::Request&, httplib::Response& res) {
            send(res, service.landmarks());
        });
        server.Get("/v1/health", [this, send](const httplib::Request&, httplib::Response& res) {
            send(res, service.health());
        });
        server.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
            send(res, error_reply(500, "internal error"));
        });
    }
};

HttpServer::HttpServer(const LocalizationService& service) : impl_(std::make_unique<Impl>(service)) {}

HttpServer::~HttpServer()
{
    impl_->server.stop();
}

int HttpServer::bind(const std::string& host, int port)
{
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0)
            throw IoError(host, "cannot bind");
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port))
        throw IoError(host + ":" + std::to_string(port), "cannot bind");
    return port;
}

void HttpServer::listen()
{
    impl_->server.listen_after_bind();
}

void HttpServer::stop()
{
    impl_->server.stop();
}

} // namespace axloc
