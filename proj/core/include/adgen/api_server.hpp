#pragma once

#include <memory>
#include <string>

#include "adgen/pipeline.hpp"

namespace httplib {
class Server;
}

namespace adgen {

/// JSON HTTP front end of an Orchestrator.
///
///   POST /batches                        BatchSpec -> batch (201, 200 when it already existed)
///   POST /batches/{id}/run[?wait=true]   202 queued run, 200 with records when waiting
///   GET  /batches/{id}                   batch + record statuses
///   GET  /generations/{id}               GenerationRecord
///   GET  /generations/{id}/image|canvas  PNG artifacts
///   POST /generations/{id}/regenerate    overrides -> new record (201)
///   GET  /rooms/{room}/categories        categories with sample ids
///   GET  /rooms/{room}/final-gallery     ok records grouped by category pair
///   POST /collections/{name}/entries     {"ids": [...]} or {"batch_id": "..."}
///   GET  /collections/{name}
///   GET  /health
///
/// Errors are {"error": {"kind": ..., "message": ...}}.
class ApiServer {
public:
    explicit ApiServer(Orchestrator& orchestrator);
    ~ApiServer();

    /// Binds to an ephemeral port and returns it (-1 on failure).
    int bind_any(const std::string& host = "127.0.0.1");
    bool bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool listen_after_bind();
    void stop();
    bool running() const;

    httplib::Server& raw();

private:
    void install_routes();

    Orchestrator& orch_;
    std::unique_ptr<httplib::Server> server_;
};

/// HTTP status used for an adgen error kind.
int http_status_for(const std::string& error_kind);

}  // namespace adgen
