#include <gtest/gtest.h>

#include <thread>

#include <boost/asio/connect.hpp>
#include <boost/asio/ip/tcp.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include "fixtures.hpp"
#include "netvis/json_codec.hpp"
#include "netvis/server.hpp"
#include "netvis/xml_io.hpp"

namespace netvis {
namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
using boost::asio::ip::tcp;
using nlohmann::json;

ServiceOptions fast_options() {
  ServiceOptions o;
  o.layout.iterations = 30;
  return o;
}

ServerOptions admin_options() {
  ServerOptions o;
  o.admin_token = "tok";
  return o;
}

HttpRequest request(std::string method, std::string target, std::string body = {}, std::string auth = {}) {
  return HttpRequest{std::move(method), std::move(target), std::move(auth), std::move(body)};
}

TEST(Routes, HealthAndSnapshot) {
  Service service(testing::small_network(), nullptr, fast_options());
  auto health = route_request(service, {}, request("GET", "/api/v1/health"));
  EXPECT_EQ(health.status, 200);
  EXPECT_EQ(health.content_type, "application/json");
  EXPECT_EQ(json::parse(health.body)["devices"], 6);
  auto snap = route_request(service, {}, request("GET", "/api/v1/snapshot?x=1"));
  EXPECT_EQ(snap.status, 200);
  EXPECT_EQ(snap.content_type, "application/xml");
  auto parsed = parse_topology(snap.body);
  ASSERT_TRUE(parsed.ok());
  EXPECT_TRUE(structurally_equal(*parsed.snapshot, testing::small_network()));
  EXPECT_EQ(route_request(service, {}, request("POST", "/api/v1/health")).status, 405);
  EXPECT_EQ(route_request(service, {}, request("GET", "/api/v2/anything")).status, 404);
}

TEST(Routes, AdminEndpointsNeedTheToken) {
  Service service(testing::small_network(), nullptr, fast_options());
  const std::string xml = testing::minimal_xml();
  EXPECT_EQ(route_request(service, {}, request("POST", "/api/v1/topology", xml, "Bearer tok")).status, 403);
  EXPECT_EQ(route_request(service, admin_options(), request("POST", "/api/v1/topology", xml)).status, 401);
  EXPECT_EQ(route_request(service, admin_options(), request("POST", "/api/v1/topology", xml, "Bearer nope")).status,
            401);
  EXPECT_EQ(route_request(service, admin_options(), request("GET", "/api/v1/topology")).status, 405);
  EXPECT_EQ(service.snapshot()->devices.size(), 6u);
}

TEST(Routes, TopologyUpload) {
  Service service(testing::small_network(), nullptr, fast_options());
  auto ok = route_request(service, admin_options(), request("POST", "/api/v1/topology", testing::minimal_xml(), "Bearer tok"));
  ASSERT_EQ(ok.status, 200) << ok.body;
  EXPECT_EQ(json::parse(ok.body)["snapshot_version"], 1);
  EXPECT_EQ(service.snapshot()->devices.size(), 2u);

  auto bad = route_request(service, admin_options(), request("POST", "/api/v1/topology", testing::dangling_xml(), "Bearer tok"));
  EXPECT_EQ(bad.status, 400);
  json body = json::parse(bad.body);
  ASSERT_EQ(body["diagnostics"].size(), 1u);
  EXPECT_EQ(body["diagnostics"][0]["line"], testing::kDanglingLine);
  EXPECT_EQ(service.snapshot()->devices.size(), 2u);
}

TEST(Routes, StatsUpload) {
  Service service(testing::small_network(), nullptr, fast_options());
  auto ok = route_request(service, admin_options(),
                          request("POST", "/api/v1/stats", R"({"l1":{"utilization_pct":80},"l2":{}})", "Bearer tok"));
  ASSERT_EQ(ok.status, 200) << ok.body;
  EXPECT_EQ(json::parse(ok.body)["applied"], 2);
  EXPECT_EQ(*service.snapshot_with_stats().links.at(LinkId("l1")).stats.utilization_pct, 80.0);
  for (const char* body : {"[1]", "nope", R"({"zz":{}})", R"({"l1":{"utilization_pct":120}})"}) {
    EXPECT_EQ(route_request(service, admin_options(), request("POST", "/api/v1/stats", body, "Bearer tok")).status, 400)
        << body;
  }
}

TEST(Routes, StaticFiles) {
  testing::TempDir dir;
  std::filesystem::create_directories(dir.path() / "www" / "js");
  testing::write_bytes(dir.path() / "www" / "index.html", "<html></html>");
  testing::write_bytes(dir.path() / "www" / "js" / "app.js", "console.log(1)");
  testing::write_bytes(dir.path() / "secret.txt", "hidden");
  Service service(testing::small_network(), nullptr, fast_options());
  ServerOptions o;
  o.static_dir = dir.path() / "www";
  auto index = route_request(service, o, request("GET", "/"));
  EXPECT_EQ(index.status, 200);
  EXPECT_EQ(index.content_type, "text/html");
  EXPECT_EQ(index.body, "<html></html>");
  auto js = route_request(service, o, request("GET", "/js/app.js?v=3"));
  EXPECT_EQ(js.content_type, "application/javascript");
  EXPECT_EQ(route_request(service, o, request("GET", "/../secret.txt")).status, 404);
  EXPECT_EQ(route_request(service, o, request("GET", "/js/../../secret.txt")).status, 404);
  EXPECT_EQ(route_request(service, o, request("GET", "/missing.css")).status, 404);
  EXPECT_EQ(route_request(service, o, request("DELETE", "/index.html")).status, 405);
  EXPECT_EQ(route_request(service, {}, request("GET", "/index.html")).status, 404);
}

class LiveServer : public ::testing::Test {
 protected:
  void SetUp() override {
    ServerOptions o = admin_options();
    o.port = 0;
    server_ = std::make_unique<HttpServer>(service_, o);
    auto started = server_->start();
    ASSERT_TRUE(started) << started.error();
    ASSERT_NE(server_->port(), 0);
  }
  void TearDown() override { server_->stop(); }

  tcp::socket connect() {
    tcp::socket socket(ioc_);
    socket.connect(tcp::endpoint(boost::asio::ip::make_address("127.0.0.1"), server_->port()));
    return socket;
  }

  Service service_{testing::small_network(), nullptr, fast_options()};
  std::unique_ptr<HttpServer> server_;
  boost::asio::io_context ioc_;
};

json read_json(websocket::stream<tcp::socket>& ws) {
  beast::flat_buffer buffer;
  ws.read(buffer);
  return json::parse(beast::buffers_to_string(buffer.data()));
}

TEST_F(LiveServer, HttpHealth) {
  beast::tcp_stream stream(connect());
  http::request<http::string_body> req{http::verb::get, "/api/v1/health", 11};
  req.set(http::field::host, "localhost");
  http::write(stream, req);
  beast::flat_buffer buffer;
  http::response<http::string_body> res;
  http::read(stream, buffer, res);
  EXPECT_EQ(res.result_int(), 200);
  EXPECT_EQ(res[http::field::content_type], "application/json");
  EXPECT_EQ(json::parse(res.body())["status"], "ok");
}

TEST_F(LiveServer, WebSocketSessionAndBroadcast) {
  websocket::stream<tcp::socket> a(connect());
  websocket::stream<tcp::socket> b(connect());
  a.handshake("localhost", "/ws/v1");
  b.handshake("localhost", "/ws/v1");
  a.write(boost::asio::buffer(json{{"type", "Hello"}, {"proto_version", 1}}.dump()));
  b.write(boost::asio::buffer(json{{"type", "Hello"}, {"proto_version", 1}}.dump()));
  json wa = read_json(a);
  json wb = read_json(b);
  ASSERT_EQ(wa["type"], "Welcome");
  ASSERT_EQ(wb["type"], "Welcome");

  Viewport v = fit_viewport(LayoutParams{}.width, LayoutParams{}.height, 1024, 768);
  for (auto* ws : {&a, &b}) {
    const json& w = ws == &a ? wa : wb;
    ws->write(boost::asio::buffer(
        json{{"type", "SetViewport"}, {"session", w["session"]}, {"viewport", v}}.dump()));
  }
  json ra = read_json(a);
  json rb = read_json(b);
  ASSERT_EQ(ra["type"], "Render");
  ASSERT_EQ(rb["type"], "Render");
  RenderSet scene_b = rb["render_set"].get<RenderSet>();

  EditOp op;
  op.payload = SetDeviceAttr{DeviceId("d3"), "rack", "r9"};
  a.write(boost::asio::buffer(json{{"type", "Edit"}, {"session", wa["session"]}, {"op", op}}.dump()));
  json ack = read_json(a);
  EXPECT_EQ(ack["type"], "EditAck");
  EXPECT_EQ(ack["version"], 1);
  json update = read_json(b);
  ASSERT_TRUE(update["type"] == "Delta" || update["type"] == "Render");
  if (update["type"] == "Delta") {
    scene_b = apply_delta(scene_b, update["delta"].get<RenderDelta>());
  } else {
    scene_b = update["render_set"].get<RenderSet>();
  }
  EXPECT_EQ(scene_b.snapshot_version, 1u);
  EXPECT_EQ(scene_b, *service_.current_query(wb["session"].get<std::string>()));
  EXPECT_EQ(service_.session_count(), 2u);

  a.close(websocket::close_code::normal);
  b.close(websocket::close_code::normal);
  for (int i = 0; i < 200 && service_.session_count() > 0; ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
  EXPECT_EQ(service_.session_count(), 0u);
}

TEST_F(LiveServer, UnknownUpgradeTargetIsNotAWebSocket) {
  websocket::stream<tcp::socket> ws(connect());
  beast::error_code ec;
  ws.handshake("localhost", "/ws/v2", ec);
  EXPECT_TRUE(ec);
}

}  // namespace
}  // namespace netvis
