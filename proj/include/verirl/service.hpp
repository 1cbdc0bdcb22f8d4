#ifndef VERIRL_SERVICE_HPP_
#define VERIRL_SERVICE_HPP_

// Newline-delimited JSON reward service. Each request line gets exactly
// one reply line; replies on a connection keep the request order.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>

#include "verirl/reward.hpp"

namespace verirl::app {

// "host:port", "[v6]:port" or ":port" (all interfaces).
struct BindAddress {
  std::string host;
  std::uint16_t port = 0;
};
BindAddress parse_bind_address(const std::string& text);

class RewardServer {
 public:
  RewardServer(reward::RewardConfig config, BindAddress bind,
               std::size_t max_line_bytes = 1 << 20);
  ~RewardServer();
  RewardServer(const RewardServer&) = delete;
  RewardServer& operator=(const RewardServer&) = delete;

  // Binds, then accepts on a background thread; one thread per connection.
  void start();
  // Closes the listener and all open connections, then joins.
  void stop();
  // Bound port (useful after binding port 0).
  std::uint16_t port() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

// Serves requests from `in` until EOF. Returns the number of replies.
std::size_t serve_stream(std::istream& in, std::ostream& out,
                         const reward::RewardConfig& config);

}  // namespace verirl::app

#endif  // VERIRL_SERVICE_HPP_
