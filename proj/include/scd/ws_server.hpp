#pragma once

#include <cstdint>
#include <memory>

namespace scd {

/// WebSocket front end for SessionHost. Each connection gets its own host, so
/// sessions never leak across connections. Text frames carry one or more
/// newline-separated JSON messages; each reply goes out as its own frame.
class WsServer {
 public:
  // Port 0 picks a free ephemeral port; see port().
  explicit WsServer(std::uint16_t port, const char* address = "127.0.0.1");
  ~WsServer();

  WsServer(const WsServer&) = delete;
  WsServer& operator=(const WsServer&) = delete;

  std::uint16_t port() const;

  // Serves on a background thread until stop().
  void start();
  // Serves on the calling thread until stop() is called from elsewhere.
  void run();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace scd
