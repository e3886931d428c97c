#include "netvis/server.hpp"

#include <deque>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>
#include <vector>

#include <boost/asio.hpp>
#include <boost/beast.hpp>
#include <nlohmann/json.hpp>

#include "netvis/json_codec.hpp"
#include "netvis/xml_io.hpp"

namespace netvis {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;
using json = nlohmann::json;

namespace {

constexpr std::uint64_t kMaxBody = 256ull << 20;

HttpReply json_reply(int status, const json& body) { return {status, "application/json", body.dump()}; }

HttpReply error_reply(int status, std::string_view message) { return json_reply(status, json{{"error", message}}); }

std::string_view mime_type(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  if (ext == ".html" || ext == ".htm") return "text/html";
  if (ext == ".js" || ext == ".mjs") return "application/javascript";
  if (ext == ".css") return "text/css";
  if (ext == ".json") return "application/json";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".png") return "image/png";
  if (ext == ".ico") return "image/vnd.microsoft.icon";
  if (ext == ".kml") return "application/vnd.google-earth.kml+xml";
  return "application/octet-stream";
}

bool authorized(const ServerOptions& options, const HttpRequest& request) {
  return !options.admin_token.empty() && request.authorization == "Bearer " + options.admin_token;
}

HttpReply serve_static(const ServerOptions& options, std::string_view target) {
  if (options.static_dir.empty()) return error_reply(404, "not found");
  std::string path(target.substr(0, target.find('?')));
  if (path.empty() || path.back() == '/') path += "index.html";
  std::filesystem::path relative = std::filesystem::path(path.substr(1)).lexically_normal();
  if (relative.empty() || relative.is_absolute() || *relative.begin() == "..") return error_reply(404, "not found");
  std::filesystem::path full = options.static_dir / relative;
  std::ifstream in(full, std::ios::binary);
  if (!in || std::filesystem::is_directory(full)) return error_reply(404, "not found");
  std::ostringstream buf;
  buf << in.rdbuf();
  return {200, std::string(mime_type(full)), buf.str()};
}

HttpReply upload_topology(Service& service, const HttpRequest& request) {
  ParseReport report = parse_topology(request.body);
  if (!report.ok()) {
    json errors = json::array();
    for (const auto& d : report.errors) {
      errors.push_back(json{{"line", d.line}, {"column", d.column}, {"message", d.message}});
    }
    return json_reply(400, json{{"error", "topology rejected"}, {"diagnostics", errors}});
  }
  if (auto ok = service.replace_topology(std::move(*report.snapshot)); !ok) {
    return error_reply(400, ok.error().message);
  }
  return json_reply(200, json{{"snapshot_version", service.snapshot()->version},
                              {"warnings", report.warnings.size()}});
}

HttpReply post_stats(Service& service, const HttpRequest& request) {
  json body;
  try {
    body = json::parse(request.body);
  } catch (const json::exception& e) {
    return error_reply(400, e.what());
  }
  if (!body.is_object()) return error_reply(400, "expected an object of link id -> stats");
  std::size_t applied = 0;
  for (const auto& [id, value] : body.items()) {
    LinkStats stats;
    try {
      stats = value.get<LinkStats>();
    } catch (const std::exception& e) {
      return error_reply(400, id + ": " + e.what());
    }
    if (auto ok = service.update_link_stats(LinkId(id), stats); !ok) return error_reply(400, ok.error().message);
    ++applied;
  }
  return json_reply(200, json{{"applied", applied}});
}

}  // namespace

HttpReply route_request(Service& service, const ServerOptions& options, const HttpRequest& request) {
  std::string_view target = request.target;
  std::string_view path = target.substr(0, target.find('?'));
  if (path == "/api/v1/health") {
    if (request.method != "GET") return error_reply(405, "use GET");
    return {200, "application/json", service.health_json()};
  }
  if (path == "/api/v1/snapshot") {
    if (request.method != "GET") return error_reply(405, "use GET");
    return {200, "application/xml", serialize_topology(service.snapshot_with_stats())};
  }
  if (path == "/api/v1/topology" || path == "/api/v1/stats") {
    if (request.method != "POST") return error_reply(405, "use POST");
    if (options.admin_token.empty()) return error_reply(403, "admin endpoints are disabled");
    if (!authorized(options, request)) return error_reply(401, "bad or missing admin token");
    return path == "/api/v1/topology" ? upload_topology(service, request) : post_stats(service, request);
  }
  if (path.starts_with("/api/")) return error_reply(404, "not found");
  if (request.method != "GET" && request.method != "HEAD") return error_reply(405, "use GET");
  return serve_static(options, target);
}

struct HttpServer::Impl {
  Service& service;
  ServerOptions options;
  net::io_context ioc;
  tcp::acceptor acceptor{ioc};
  net::steady_timer stats_timer{ioc};
  std::vector<std::thread> threads;
  std::optional<net::executor_work_guard<net::io_context::executor_type>> work;

  Impl(Service& s, ServerOptions o) : service(s), options(std::move(o)) {}

  void accept();
  void schedule_stats();
};

namespace {

class WsConnection : public std::enable_shared_from_this<WsConnection> {
 public:
  WsConnection(tcp::socket&& socket, Service& service) : ws_(std::move(socket)), service_(service) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.read_message_max(kMaxBody);
    ws_.async_accept(req, beast::bind_front_handler(&WsConnection::on_accept, shared_from_this()));
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    read();
  }

  void read() { ws_.async_read(buffer_, beast::bind_front_handler(&WsConnection::on_read, shared_from_this())); }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec) {
      for (const auto& id : sessions_) service_.close_session(id);
      sessions_.clear();
      return;
    }
    std::string text = beast::buffers_to_string(buffer_.data());
    buffer_.consume(buffer_.size());
    std::weak_ptr<WsConnection> weak = shared_from_this();
    auto id = service_.handle_message(text, [weak](std::string message) {
      if (auto self = weak.lock()) self->enqueue(std::move(message));
    });
    if (!id.empty()) sessions_.push_back(std::move(id));
    read();
  }

  void enqueue(std::string message) {
    std::lock_guard lock(mutex_);
    outbox_.push_back(std::move(message));
    if (writing_) return;
    writing_ = true;
    net::post(ws_.get_executor(), [self = shared_from_this()] { self->write_next(); });
  }

  void write_next() {
    {
      std::lock_guard lock(mutex_);
      if (outbox_.empty()) {
        writing_ = false;
        return;
      }
      current_ = std::move(outbox_.front());
      outbox_.pop_front();
    }
    ws_.text(true);
    ws_.async_write(net::buffer(current_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) {
        std::lock_guard lock(self->mutex_);
        self->outbox_.clear();
        self->writing_ = false;
        return;
      }
      self->write_next();
    });
  }

  websocket::stream<beast::tcp_stream> ws_;
  Service& service_;
  beast::flat_buffer buffer_;
  std::vector<std::string> sessions_;
  std::mutex mutex_;
  std::deque<std::string> outbox_;
  std::string current_;
  bool writing_ = false;
};

class HttpConnection : public std::enable_shared_from_this<HttpConnection> {
 public:
  HttpConnection(tcp::socket&& socket, Service& service, const ServerOptions& options)
      : stream_(std::move(socket)), service_(service), options_(options) {}

  void run() {
    net::dispatch(stream_.get_executor(), beast::bind_front_handler(&HttpConnection::read, shared_from_this()));
  }

 private:
  void read() {
    parser_.emplace();
    parser_->body_limit(kMaxBody);
    stream_.expires_after(std::chrono::seconds(60));
    http::async_read(stream_, buffer_, *parser_, beast::bind_front_handler(&HttpConnection::on_read, shared_from_this()));
  }

  void on_read(beast::error_code ec, std::size_t) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    http::request<http::string_body> req = parser_->release();
    if (websocket::is_upgrade(req)) {
      if (req.target() == "/ws/v1") {
        stream_.expires_never();
        std::make_shared<WsConnection>(stream_.release_socket(), service_)->run(std::move(req));
        return;
      }
    }
    HttpRequest request{std::string(req.method_string()), std::string(req.target()),
                        std::string(req[http::field::authorization]), std::move(req.body())};
    HttpReply reply = route_request(service_, options_, request);
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(reply.status),
                                                                   req.version());
    res->set(http::field::server, "netvis");
    res->set(http::field::content_type, reply.content_type);
    res->keep_alive(req.keep_alive());
    res->body() = req.method() == http::verb::head ? std::string{} : std::move(reply.body);
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (res->need_eof()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  std::optional<http::request_parser<http::string_body>> parser_;
  Service& service_;
  const ServerOptions& options_;
};

}  // namespace

void HttpServer::Impl::accept() {
  acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
    if (!acceptor.is_open()) return;
    if (!ec) std::make_shared<HttpConnection>(std::move(socket), service, options)->run();
    accept();
  });
}

void HttpServer::Impl::schedule_stats() {
  stats_timer.expires_after(std::chrono::seconds(std::max(1u, options.refresh_rate_seconds)));
  stats_timer.async_wait([this](beast::error_code ec) {
    if (ec) return;
    service.push_stats();
    schedule_stats();
  });
}

HttpServer::HttpServer(Service& service, ServerOptions options)
    : impl_(std::make_unique<Impl>(service, std::move(options))) {}

HttpServer::~HttpServer() { stop(); }

Status<std::string> HttpServer::start() {
  beast::error_code ec;
  auto address = net::ip::make_address(impl_->options.host, ec);
  if (ec) return unexpected("bad listen address " + impl_->options.host + ": " + ec.message());
  tcp::endpoint endpoint(address, impl_->options.port);
  auto& acceptor = impl_->acceptor;
  acceptor.open(endpoint.protocol(), ec);
  if (!ec) acceptor.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acceptor.bind(endpoint, ec);
  if (!ec) acceptor.listen(net::socket_base::max_listen_connections, ec);
  if (ec) return unexpected("cannot listen on " + impl_->options.host + ":" +
                            std::to_string(impl_->options.port) + ": " + ec.message());
  impl_->work.emplace(impl_->ioc.get_executor());
  impl_->accept();
  impl_->schedule_stats();
  for (unsigned i = 0; i < std::max(1u, impl_->options.threads); ++i) {
    impl_->threads.emplace_back([this] { impl_->ioc.run(); });
  }
  return ok_status;
}

unsigned short HttpServer::port() const {
  beast::error_code ec;
  auto endpoint = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : endpoint.port();
}

void HttpServer::wait_for_signal() {
  net::io_context signals_ctx;
  net::signal_set signals(signals_ctx, SIGINT, SIGTERM);
  signals.async_wait([](beast::error_code, int) {});
  signals_ctx.run();
  stop();
}

void HttpServer::stop() {
  if (impl_->threads.empty()) return;
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
    impl_->stats_timer.cancel();
  });
  impl_->work.reset();
  impl_->ioc.stop();
  for (auto& t : impl_->threads) t.join();
  impl_->threads.clear();
}

}  // namespace netvis
