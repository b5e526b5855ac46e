#pragma once

#include <cstddef>
#include <memory>
#include <string>

#include "afs/critic.hpp"

// In-process HTTP test double for the critic protocol.  Two layers:
//
//  - oracle mode (set_scene): /diagnose and /score run the local oracle on
//    the posted preview, so a remote round trip must agree with the oracle
//    bit-for-bit;
//  - fixture mode (set_fixture): a path returns a canned status/body, which
//    is how tests provoke schema violations, 5xx storms, and bad payloads.
//
// set_flaky makes the next N requests to a path fail with a given status
// before normal handling resumes (retry tests); set_delay_ms makes a path
// stall before answering (timeout tests).  All knobs are thread-safe and may
// be flipped between requests.

namespace afs {

class MockCriticServer {
 public:
  // Binds 127.0.0.1 on an ephemeral port (or `port` if nonzero) and serves
  // on a background thread.  Throws Error if the socket can't be bound.
  explicit MockCriticServer(int port = 0);
  ~MockCriticServer();

  MockCriticServer(const MockCriticServer&) = delete;
  MockCriticServer& operator=(const MockCriticServer&) = delete;

  int port() const;
  std::string url() const;  // "http://127.0.0.1:<port>"

  void set_scene(SceneSpec spec, RubricConfig rubric = {});
  void set_fixture(const std::string& path, int status, std::string body);
  void clear_fixture(const std::string& path);
  void set_flaky(const std::string& path, int fail_first, int status = 500);
  void set_delay_ms(const std::string& path, int ms);

  // How many requests this path has received (including flaky failures).
  std::size_t requests(const std::string& path) const;

  void stop();
  void wait();  // blocks until stop() (CLI `mock-critic` foreground mode)

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace afs
