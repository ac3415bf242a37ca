#ifndef WIDENET_SERVICE_H
#define WIDENET_SERVICE_H

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <thread>

#include "widenet/error.h"
#include "widenet/index.h"
#include "widenet/kb_graph.h"
#include "widenet/session.h"

namespace widenet {

inline constexpr int kSchemaVersion = 1;
inline constexpr std::size_t kTypeaheadLimit = 20;

struct ApiRequest {
  std::string method;  // "GET" / "POST"
  std::string path;
  std::map<std::string, std::string> query;
  std::string body;
};

struct ApiResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::map<std::string, std::string> headers;
};

int http_status(ErrorCode code);

// Transport-independent request handling. Graph and index are shared
// read-only; each session has its own lock so mutations on one session are
// serialized while distinct sessions proceed in parallel.
class Api {
 public:
  struct Options {
    // When set, every session's audit log is appended to
    // <session_dir>/<session_id>.jsonl and existing logs are replayed on
    // construction.
    std::optional<std::string> session_dir;
    PreviewOptions preview;
    int page_size = 20;
    Clock clock = utc_now;
    std::function<std::string()> new_session_id;  // random hex when empty
  };

  Api(std::shared_ptr<const KnowledgeGraph> graph,
      std::shared_ptr<const CorpusIndex> index);
  Api(std::shared_ptr<const KnowledgeGraph> graph,
      std::shared_ptr<const CorpusIndex> index, Options options);

  ApiResponse handle(const ApiRequest& request);

  std::size_t session_count() const;

 private:
  struct SessionSlot {
    std::mutex mutex;
    Session session;
    explicit SessionSlot(Session s) : session(std::move(s)) {}
  };

  ApiResponse route(const ApiRequest& request);
  ApiResponse health() const;
  ApiResponse categories(const ApiRequest& request) const;
  ApiResponse create_session(const ApiRequest& request);
  ApiResponse session_action(const ApiRequest& request, const std::string& id,
                             const std::string& action);

  std::shared_ptr<SessionSlot> find_session(const std::string& id) const;
  void persist(const Session& session, std::size_t from_record) const;
  std::string session_json(const Session& session) const;
  void load_sessions();

  std::shared_ptr<const KnowledgeGraph> graph_;
  std::shared_ptr<const CorpusIndex> index_;
  Options options_;
  mutable std::shared_mutex sessions_mutex_;
  std::map<std::string, std::shared_ptr<SessionSlot>> sessions_;
};

// HTTP front end over Api (cpp-httplib).
class HttpServer {
 public:
  explicit HttpServer(Api& api);
  ~HttpServer();
  HttpServer(const HttpServer&) = delete;
  HttpServer& operator=(const HttpServer&) = delete;

  // Binds and serves on a background thread. port 0 picks a free port.
  // Returns the bound port; throws Error(internal) on bind failure.
  int start(const std::string& host, int port);
  // Blocks until stop() is called from elsewhere.
  void run(const std::string& host, int port);
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace widenet

#endif  // WIDENET_SERVICE_H
