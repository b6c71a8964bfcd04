#pragma once

/**
 * @file remote.hpp
 * @brief HTTP/JSON logit protocol: client provider and a mock server.
 *
 *   GET  /v1/meta   -> {"name", "vocab_size", "param_count_b", "vocab_fingerprint"}
 *   POST /v1/logits {"token_ids": [...]} -> {"logits": [V floats]}
 *
 * Doubles travel in shortest round-trip decimal form, so a remote provider
 * wrapping model m returns exactly m's logits.
 */

#include <atomic>
#include <chrono>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "ead/error.hpp"
#include "ead/provider.hpp"

namespace ead {

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{100};
  std::chrono::milliseconds connect_timeout{5000};
  std::chrono::milliseconds read_timeout{30000};
};

class RemoteProvider final : public ModelProvider {
 public:
  /// `endpoint` is scheme://host:port. Fetches /v1/meta immediately; when
  /// `expected` is given its vocabulary must match the server's.
  explicit RemoteProvider(std::string endpoint, RetryPolicy retry = {},
                          std::optional<ModelMeta> expected = std::nullopt)
      : endpoint_(std::move(endpoint)), retry_(retry) {
    const auto body = request([](httplib::Client& c) { return c.Get("/v1/meta"); }, "GET /v1/meta");
    try {
      meta_ = nlohmann::json::parse(body).get<ModelMeta>();
      meta_.validate();
    } catch (const std::exception& e) {
      throw Error(ErrorKind::BackendCorrupt, endpoint_ + " /v1/meta: " + e.what());
    }
    if (expected && (expected->vocab_size != meta_.vocab_size ||
                     expected->vocab_fingerprint != meta_.vocab_fingerprint)) {
      throw Error(ErrorKind::IncompatiblePair,
                  endpoint_ + " serves vocab_size " + std::to_string(meta_.vocab_size) + " (fp " +
                      fingerprint_hex(meta_.vocab_fingerprint) + "), expected " +
                      std::to_string(expected->vocab_size) + " (fp " +
                      fingerprint_hex(expected->vocab_fingerprint) + ")");
    }
  }

  const ModelMeta& meta() const override { return meta_; }
  const std::string& endpoint() const noexcept { return endpoint_; }

  LogitVector score(std::span<const TokenId> ctx) const override {
    check_context(ctx, meta_.vocab_size);
    const std::string payload =
        nlohmann::json{{"token_ids", std::vector<TokenId>(ctx.begin(), ctx.end())}}.dump();
    const auto body = request(
        [&](httplib::Client& c) { return c.Post("/v1/logits", payload, "application/json"); },
        "POST /v1/logits");
    std::vector<double> logits;
    try {
      logits = nlohmann::json::parse(body).at("logits").get<std::vector<double>>();
    } catch (const std::exception& e) {
      throw Error(ErrorKind::BackendCorrupt, endpoint_ + " /v1/logits: " + e.what());
    }
    if (logits.size() != meta_.vocab_size) {
      throw Error(ErrorKind::BackendCorrupt, endpoint_ + " returned " + std::to_string(logits.size()) +
                                                 " logits for vocab_size " +
                                                 std::to_string(meta_.vocab_size));
    }
    try {
      return LogitVector(std::move(logits));
    } catch (const Error& e) {
      throw Error(ErrorKind::BackendCorrupt, endpoint_ + ": " + e.what());
    }
  }

 private:
  // A fresh client per request keeps the provider safe to share across threads.
  template <typename Send>
  std::string request(Send&& send, const char* what) const {
    auto backoff = retry_.initial_backoff;
    std::string last_error;
    for (int attempt = 1; attempt <= retry_.attempts; ++attempt) {
      httplib::Client client(endpoint_);
      client.set_connection_timeout(retry_.connect_timeout);
      client.set_read_timeout(retry_.read_timeout);
      client.set_keep_alive(false);
      auto res = send(client);
      if (!res) {
        last_error = httplib::to_string(res.error());
      } else if (res->status >= 500) {
        last_error = "HTTP " + std::to_string(res->status);
      } else if (res->status >= 400) {
        throw Error(ErrorKind::InvalidInput,
                    endpoint_ + " " + what + " rejected: HTTP " + std::to_string(res->status) + " " + res->body);
      } else if (res->status != 200) {
        throw Error(ErrorKind::BackendCorrupt,
                    endpoint_ + " " + what + ": unexpected HTTP " + std::to_string(res->status));
      } else {
        return res->body;
      }
      if (attempt < retry_.attempts) {
        std::this_thread::sleep_for(backoff);
        backoff *= 2;
      }
    }
    throw Error(ErrorKind::BackendUnavailable, endpoint_ + " " + what + " failed after " +
                                                   std::to_string(retry_.attempts) + " attempts: " + last_error);
  }

  std::string endpoint_;
  RetryPolicy retry_;
  ModelMeta meta_;
};

/// Serves one provider over the logit protocol on a background thread.
class MockServer {
 public:
  explicit MockServer(std::shared_ptr<const ModelProvider> provider) : provider_(std::move(provider)) {
    // httplib defaults to SO_REUSEPORT, which lets a second server share a busy port.
    server_.set_socket_options([](socket_t sock) {
      int yes = 1;
      setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
    });
    server_.Get("/v1/meta", [this](const httplib::Request&, httplib::Response& res) {
      res.set_content(nlohmann::json(provider_->meta()).dump(), "application/json");
    });
    server_.Post("/v1/logits", [this](const httplib::Request& req, httplib::Response& res) {
      handle_logits(req, res);
    });
  }

  MockServer(const MockServer&) = delete;
  MockServer& operator=(const MockServer&) = delete;

  ~MockServer() { stop(); }

  /// Binds and starts serving. Port 0 picks a free port. Returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0) {
    int bound = port;
    if (port == 0) {
      bound = server_.bind_to_any_port(host);
      if (bound < 0) throw Error(ErrorKind::InvalidConfig, "cannot bind " + host);
    } else if (!server_.bind_to_port(host, port)) {
      throw Error(ErrorKind::InvalidConfig, "cannot bind " + host + ":" + std::to_string(port) + " (in use?)");
    }
    port_ = bound;
    host_ = host;
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
    return bound;
  }

  void stop() {
    if (thread_.joinable()) {
      server_.stop();
      thread_.join();
    }
  }

  int port() const noexcept { return port_; }
  std::string endpoint() const { return "http://" + host_ + ":" + std::to_string(port_); }
  std::size_t requests_served() const noexcept { return served_.load(); }

 private:
  void handle_logits(const httplib::Request& req, httplib::Response& res) {
    auto fail = [&](int status, const std::string& msg) {
      res.status = status;
      res.set_content(nlohmann::json{{"error", msg}}.dump(), "application/json");
    };
    std::vector<TokenId> ids;
    try {
      const auto body = nlohmann::json::parse(req.body);
      const auto& arr = body.at("token_ids");
      if (!arr.is_array()) return fail(400, "token_ids must be an array");
      ids.reserve(arr.size());
      for (const auto& v : arr) {
        if (!v.is_number_integer() || v.get<long long>() < 0) {
          return fail(400, "token_ids must be non-negative integers");
        }
        ids.push_back(v.get<TokenId>());
      }
    } catch (const std::exception& e) {
      return fail(400, std::string("malformed body: ") + e.what());
    }
    try {
      const LogitVector logits = provider_->score(ids);
      res.set_content(nlohmann::json{{"logits", logits.vector()}}.dump(), "application/json");
      ++served_;
    } catch (const Error& e) {
      fail(e.kind() == ErrorKind::InvalidInput ? 400 : 500, e.what());
    } catch (const std::exception& e) {
      fail(500, e.what());
    }
  }

  std::shared_ptr<const ModelProvider> provider_;
  httplib::Server server_;
  std::thread thread_;
  std::string host_ = "127.0.0.1";
  int port_ = 0;
  std::atomic<std::size_t> served_{0};
};

}  // namespace ead
