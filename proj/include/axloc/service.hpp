#ifndef AXLOC_SERVICE_HPP
#define AXLOC_SERVICE_HPP

#include <memory>
#include <string>

#include "axloc/config.hpp"
#include "axloc/coords.hpp"

namespace axloc {

struct HttpReply {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
};

/// Stateless JSON endpoints over precomputed slice predictions:
///   POST /v1/localize   200 accepted, 422 rejected (body still carries the fit), 400 bad request
///   GET  /v1/landmarks  active landmark table
///   GET  /v1/health     liveness and version
/// Handlers are plain functions of the request body so they can be tested
/// without a socket.
class LocalizationService {
public:
    LocalizationService(Settings settings, LandmarkTable landmarks);

    HttpReply localize(const std::string& body) const;
    HttpReply landmarks() const;
    HttpReply health() const;

    const Settings& settings() const noexcept { return settings_; }

private:
    Settings settings_;
    LandmarkTable landmarks_;
};

/// HTTP/1.1 front for a LocalizationService.
class HttpServer {
public:
    explicit HttpServer(const LocalizationService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds; port 0 picks a free port. Returns the bound port. Throws IoError
    /// when the address cannot be bound.
    int bind(const std::string& host, int port);
    /// Serves until stop(); call after bind().
    void listen();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

} // namespace axloc

#endif
