#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include "loosectl/scene.hpp"

namespace httplib {
class Server;
}

namespace lc {

inline constexpr const char* kServiceVersion = "0.1.0";

/// Content-derived etag of a scene (hash of its canonical document).
std::string scene_etag(const SceneSpec& scene);

/// In-memory scene store. Writes to one scene are serialized; reads and
/// renders of other scenes proceed concurrently.
class SceneStore {
public:
    struct Versioned {
        SceneSpec scene;
        std::string etag;
    };

    enum class UpdateStatus { ok, not_found, conflict };

    struct UpdateResult {
        UpdateStatus status = UpdateStatus::ok;
        std::string etag;  // new etag on ok, current etag on conflict
    };

    std::pair<std::string, std::string> create(SceneSpec scene);
    std::optional<Versioned> get(const std::string& id) const;
    UpdateResult update(const std::string& id, const std::string& if_match, SceneSpec scene);
    std::size_t size() const;

    /// Persist every scene as <dir>/<id>.json in the scene file format.
    void save_snapshot(const std::filesystem::path& dir) const;
    /// Load <dir>/*.json; ids come from file stems.
    void load_snapshot(const std::filesystem::path& dir);

private:
    struct Slot {
        mutable std::mutex write_mutex;
        mutable std::shared_mutex data_mutex;
        Versioned value;
    };

    std::shared_ptr<Slot> find(const std::string& id) const;

    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Slot>> slots_;
    std::size_t next_id_ = 1;
};

struct ServiceOptions {
    std::size_t max_payload_bytes = 64u * 1024u * 1024u;
    std::optional<std::filesystem::path> snapshot_dir;
};

/// Local HTTP API over the store and the proxy pipelines.
class Service {
public:
    explicit Service(ServiceOptions opts = {});
    ~Service();

    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Bind to host:port (port 0 picks a free port); returns the bound port
    /// or -1.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool listen();
    void stop();
    /// Write the snapshot if configured.
    void shutdown_snapshot() const;

    SceneStore& store() { return store_; }

private:
    void install_routes();

    ServiceOptions opts_;
    SceneStore store_;
    std::unique_ptr<httplib::Server> server_;
};

}  // namespace lc
