#include "verirl/service.hpp"

#include <atomic>
#include <istream>
#include <list>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <boost/asio.hpp>

#include "verirl/records.hpp"

namespace verirl::app {

namespace asio = boost::asio;
using tcp = asio::ip::tcp;

BindAddress parse_bind_address(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) {
    throw std::invalid_argument("bind address must look like host:port, got '" +
                                text + "'");
  }
  BindAddress out;
  out.host = text.substr(0, colon);
  if (out.host.size() >= 2 && out.host.front() == '[' && out.host.back() == ']') {
    out.host = out.host.substr(1, out.host.size() - 2);
  }
  const std::string port = text.substr(colon + 1);
  unsigned long value = 0;
  try {
    std::size_t used = 0;
    value = std::stoul(port, &used);
    if (used != port.size()) throw std::invalid_argument(port);
  } catch (const std::exception&) {
    throw std::invalid_argument("invalid port '" + port + "'");
  }
  if (value > 65535) throw std::invalid_argument("port out of range: " + port);
  out.port = static_cast<std::uint16_t>(value);
  return out;
}

struct RewardServer::Impl {
  reward::RewardConfig config;
  BindAddress bind;
  std::size_t max_line;
  asio::io_context io;
  tcp::acceptor acceptor{io};
  std::thread accept_thread;
  tcp::endpoint local;
  std::mutex mu;
  struct Connection {
    std::shared_ptr<tcp::socket> socket;
    std::shared_ptr<std::atomic<bool>> done;
    std::thread thread;
  };
  std::list<Connection> connections;
  std::atomic<bool> stopping{false};
  bool started = false;

  void reap_finished() {
    for (auto it = connections.begin(); it != connections.end();) {
      if (*it->done) {
        it->thread.join();
        it = connections.erase(it);
      } else {
        ++it;
      }
    }
  }

  void handle(std::shared_ptr<tcp::socket> sock) {
    asio::streambuf buf(max_line);
    boost::system::error_code ec;
    std::string line;
    std::istream in(&buf);
    while (!stopping) {
      asio::read_until(*sock, buf, '\n', ec);
      if (ec == asio::error::not_found) {
        const std::string reply =
            to_line(error_json(nullptr, "request line exceeds " +
                                            std::to_string(max_line) +
                                            " bytes")) + "\n";
        asio::write(*sock, asio::buffer(reply), ec);
        break;
      }
      if (ec && buf.size() == 0) break;
      if (!std::getline(in, line)) break;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty() && ec) break;
      const std::string reply = to_line(score_line(line, config)) + "\n";
      asio::write(*sock, asio::buffer(reply), ec);
      if (ec) break;
    }
    boost::system::error_code ignore;
    sock->shutdown(tcp::socket::shutdown_both, ignore);
    sock->close(ignore);
  }

  void accept_loop() {
    while (!stopping) {
      auto sock = std::make_shared<tcp::socket>(io);
      boost::system::error_code ec;
      acceptor.accept(*sock, ec);
      if (ec) {
        if (stopping) break;
        continue;
      }
      if (stopping) break;
      std::lock_guard lock(mu);
      reap_finished();
      auto done = std::make_shared<std::atomic<bool>>(false);
      connections.push_back({sock, done, std::thread([this, sock, done] {
                               handle(sock);
                               *done = true;
                             })});
    }
  }
};

RewardServer::RewardServer(reward::RewardConfig config, BindAddress bind,
                           std::size_t max_line_bytes)
    : impl_(std::make_unique<Impl>()) {
  config.validate();
  impl_->config = std::move(config);
  impl_->bind = std::move(bind);
  impl_->max_line = max_line_bytes;
}

RewardServer::~RewardServer() { stop(); }

void RewardServer::start() {
  if (impl_->started) throw std::logic_error("server already started");
  const auto& b = impl_->bind;
  tcp::endpoint ep;
  if (b.host.empty()) {
    ep = tcp::endpoint(tcp::v4(), b.port);
  } else {
    tcp::resolver resolver(impl_->io);
    auto results = resolver.resolve(b.host, std::to_string(b.port),
                                    tcp::resolver::passive);
    if (results.empty()) throw std::runtime_error("cannot resolve " + b.host);
    ep = results.begin()->endpoint();
  }
  impl_->acceptor.open(ep.protocol());
  impl_->acceptor.set_option(tcp::acceptor::reuse_address(true));
  impl_->acceptor.bind(ep);
  impl_->acceptor.listen();
  impl_->local = impl_->acceptor.local_endpoint();
  impl_->started = true;
  impl_->accept_thread = std::thread([this] { impl_->accept_loop(); });
}

void RewardServer::stop() {
  if (!impl_ || !impl_->started || impl_->stopping.exchange(true)) return;
  boost::system::error_code ignore;
  // Wake the blocking accept() with a throwaway connection.
  {
    auto target = impl_->local;
    if (target.address().is_unspecified()) {
      target.address(target.address().is_v6()
                         ? asio::ip::address(asio::ip::address_v6::loopback())
                         : asio::ip::address(asio::ip::address_v4::loopback()));
    }
    tcp::socket poke(impl_->io);
    poke.connect(target, ignore);
  }
  if (impl_->accept_thread.joinable()) impl_->accept_thread.join();
  impl_->acceptor.close(ignore);
  std::list<Impl::Connection> connections;
  {
    std::lock_guard lock(impl_->mu);
    for (auto& c : impl_->connections) {
      c.socket->shutdown(tcp::socket::shutdown_both, ignore);
    }
    connections.swap(impl_->connections);
  }
  for (auto& c : connections) c.thread.join();
}

std::uint16_t RewardServer::port() const { return impl_->local.port(); }

std::size_t serve_stream(std::istream& in, std::ostream& out,
                         const reward::RewardConfig& config) {
  config.validate();
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    out << to_line(score_line(line, config)) << '\n' << std::flush;
    ++n;
  }
  return n;
}

}  // namespace verirl::app
