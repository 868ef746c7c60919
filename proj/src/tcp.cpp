/*
 * Copyright 2026 The enctopk Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */


#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <netinet/tcp.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>

#include "enctopk/errors.hpp"
#include "enctopk/runtime.hpp"

namespace enctopk {
namespace {

std::string sys_error(const std::string& what) {
  return what + ": " + std::strerror(errno);
}

class TcpChannel : public Channel {
 public:
  explicit TcpChannel(int fd) : fd_(fd) {
    int one = 1;
    ::setsockopt(fd_, IPPROTO_TCP, TCP_NODELAY, &one, sizeof(one));
  }
  ~TcpChannel() override {
    close();
    ::close(fd_);
  }

  void send(Bytes frame) override {
    std::size_t off = 0;
    while (off < frame.size()) {
      ssize_t n = ::send(fd_, frame.data() + off, frame.size() - off, MSG_NOSIGNAL);
      if (n < 0 && errno == EINTR) continue;
      if (n <= 0) throw IoError(sys_error("tcp send"));
      off += static_cast<std::size_t>(n);
    }
  }

  Bytes recv() override {
    Bytes frame(kFrameHeader);
    read_exact(frame.data(), kFrameHeader);
    std::uint32_t len = (std::uint32_t{frame[0]} << 24) |
                        (std::uint32_t{frame[1]} << 16) |
                        (std::uint32_t{frame[2]} << 8) | frame[3];
    if (len > kMaxPayload) throw ProtocolError("oversized frame");
    frame.resize(kFrameHeader + len);
    read_exact(frame.data() + kFrameHeader, len);
    return frame;
  }

  void close() override { ::shutdown(fd_, SHUT_RDWR); }

 private:
  void read_exact(std::uint8_t* out, std::size_t n) {
    std::size_t off = 0;
    while (off < n) {
      ssize_t r = ::recv(fd_, out + off, n - off, 0);
      if (r < 0 && errno == EINTR) continue;
      if (r == 0) throw IoError("channel closed");
      if (r < 0) throw IoError(sys_error("tcp recv"));
      off += static_cast<std::size_t>(r);
    }
  }

  int fd_;
};

addrinfo* resolve(const std::string& host, std::uint16_t port, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_UNSPEC;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  std::string service = std::to_string(port);
  int rc = ::getaddrinfo(host.empty() ? nullptr : host.c_str(), service.c_str(),
                         &hints, &res);
  if (rc != 0) throw IoError("cannot resolve " + host + ": " + gai_strerror(rc));
  return res;
}

}  // namespace

TcpListener::TcpListener(const std::string& host, std::uint16_t port) {
  addrinfo* res = resolve(host, port, true);
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    int fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof(one));
    if (::bind(fd, a->ai_addr, a->ai_addrlen) == 0 && ::listen(fd, 16) == 0) {
      fd_ = fd;
      break;
    }
    ::close(fd);
  }
  ::freeaddrinfo(res);
  if (fd_ < 0) throw IoError(sys_error("cannot listen on " + host));
  sockaddr_storage addr{};
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  if (addr.ss_family == AF_INET) {
    port_ = ntohs(reinterpret_cast<sockaddr_in*>(&addr)->sin_port);
  } else {
    port_ = ntohs(reinterpret_cast<sockaddr_in6*>(&addr)->sin6_port);
  }
}

TcpListener::~TcpListener() {
  if (fd_ >= 0) ::close(fd_);
}

void TcpListener::shutdown() { ::shutdown(fd_, SHUT_RDWR); }

std::unique_ptr<Channel> TcpListener::accept() {
  while (true) {
    int fd = ::accept(fd_, nullptr, nullptr);
    if (fd >= 0) return std::make_unique<TcpChannel>(fd);
    if (errno != EINTR) throw IoError(sys_error("accept"));
  }
}

std::unique_ptr<Channel> tcp_connect(const std::string& host,
                                     std::uint16_t port) {
  addrinfo* res = resolve(host, port, false);
  int fd = -1;
  for (addrinfo* a = res; a != nullptr; a = a->ai_next) {
    fd = ::socket(a->ai_family, a->ai_socktype, a->ai_protocol);
    if (fd < 0) continue;
    if (::connect(fd, a->ai_addr, a->ai_addrlen) == 0) break;
    ::close(fd);
    fd = -1;
  }
  ::freeaddrinfo(res);
  if (fd < 0) throw IoError(sys_error("cannot connect to " + host + ":" +
                                      std::to_string(port)));
  return std::make_unique<TcpChannel>(fd);
}

}  // namespace enctopk
