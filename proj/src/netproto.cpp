#include "cofed/netproto.hpp"

#include "cofed/manifest.hpp"

#include <json.hpp>

#include <arpa/inet.h>
#include <netdb.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cerrno>
#include <chrono>
#include <condition_variable>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <thread>

namespace cofed::net {
namespace {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

[[noreturn]] void bad(const std::string& message) { throw ProtocolError(message); }

// ---------------------------------------------------------------- encoding

json space_json(const LabelSpace& space) {
  json a = json::array();
  for (auto c : space) a.push_back(c.value);
  return a;
}

void expect_keys(const json& obj, std::initializer_list<std::string_view> keys, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& [key, value] : obj.items())
    if (std::find(keys.begin(), keys.end(), key) == keys.end()) bad(where + " has unexpected key '" + key + "'");
  for (auto key : keys)
    if (!obj.contains(std::string(key))) bad(where + " is missing key '" + std::string(key) + "'");
}

std::int64_t get_int(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_integer()) bad(where + "." + key + " must be an integer");
  return v.get<std::int64_t>();
}

std::uint64_t get_count(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_number_unsigned()) bad(where + "." + key + " must be a non-negative integer");
  return v.get<std::uint64_t>();
}

int get_id(const json& obj, const char* key, const std::string& where) {
  const auto v = get_int(obj, key, where);
  if (v < 0 || v > std::numeric_limits<int>::max()) bad(where + "." + key + " is out of range");
  return static_cast<int>(v);
}

std::string get_string(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_string()) bad(where + "." + key + " must be a string");
  return v.get<std::string>();
}

std::vector<std::uint64_t> get_uint_array(const json& obj, const char* key, const std::string& where) {
  const auto& v = obj.at(key);
  if (!v.is_array()) bad(where + "." + key + " must be an array");
  std::vector<std::uint64_t> out;
  out.reserve(v.size());
  for (const auto& e : v) {
    if (!e.is_number_unsigned()) bad(where + "." + key + " must hold non-negative integers");
    out.push_back(e.get<std::uint64_t>());
  }
  return out;
}

CategoryId to_category(std::uint64_t v, const std::string& where) {
  if (v > std::numeric_limits<std::uint32_t>::max()) bad(where + " holds an out-of-range category id");
  return CategoryId(static_cast<std::uint32_t>(v));
}

json payload_of(const Register& m) {
  return {{"participant", m.participant}, {"label_space", space_json(m.label_space)}, {"n_local", m.n_local}};
}
json payload_of(const RegisterAck& m) {
  return {{"participant", m.participant},
          {"m", m.m},
          {"public_sha256", m.public_sha256},
          {"participants", m.participants}};
}
json payload_of(const Predictions& m) {
  json a = json::array();
  for (auto c : m.predictions) a.push_back(c.value);
  return {{"participant", m.participant}, {"predictions", a}};
}
json payload_of(const Bundle& m) {
  json entries = json::array();
  for (const auto& e : m.bundle.entries) entries.push_back({{"category", e.category.value}, {"indices", e.indices}});
  return {{"participant", m.bundle.owner}, {"entries", entries}};
}
json payload_of(const Error& m) { return {{"message", m.message}}; }
json payload_of(const Bye& m) { return {{"participant", m.participant}}; }

Message decode_payload(std::string_view kind, const json& p) {
  const std::string where = std::string(kind) + " payload";
  if (kind == "REGISTER") {
    expect_keys(p, {"participant", "label_space", "n_local"}, where);
    Register m;
    m.participant = get_id(p, "participant", where);
    std::vector<CategoryId> cats;
    for (auto v : get_uint_array(p, "label_space", where)) cats.push_back(to_category(v, where + ".label_space"));
    try {
      m.label_space = LabelSpace(std::move(cats));
    } catch (const std::invalid_argument& e) {
      bad(where + ".label_space: " + e.what());
    }
    m.n_local = get_count(p, "n_local", where);
    return m;
  }
  if (kind == "REGISTER_ACK") {
    expect_keys(p, {"participant", "m", "public_sha256", "participants"}, where);
    RegisterAck m;
    m.participant = get_id(p, "participant", where);
    m.m = get_count(p, "m", where);
    m.public_sha256 = get_string(p, "public_sha256", where);
    m.participants = get_id(p, "participants", where);
    return m;
  }
  if (kind == "PREDICTIONS") {
    expect_keys(p, {"participant", "predictions"}, where);
    Predictions m;
    m.participant = get_id(p, "participant", where);
    for (auto v : get_uint_array(p, "predictions", where)) m.predictions.push_back(to_category(v, where));
    return m;
  }
  if (kind == "BUNDLE") {
    expect_keys(p, {"participant", "entries"}, where);
    Bundle m;
    m.bundle.owner = get_id(p, "participant", where);
    const auto& entries = p.at("entries");
    if (!entries.is_array()) bad(where + ".entries must be an array");
    for (const auto& e : entries) {
      expect_keys(e, {"category", "indices"}, where + ".entries[]");
      PseudolabelSet set;
      set.category = to_category(get_count(e, "category", where), where);
      for (auto i : get_uint_array(e, "indices", where)) set.indices.push_back(static_cast<std::size_t>(i));
      m.bundle.entries.push_back(std::move(set));
    }
    return m;
  }
  if (kind == "ERROR") {
    expect_keys(p, {"message"}, where);
    return Error{get_string(p, "message", where)};
  }
  if (kind == "BYE") {
    expect_keys(p, {"participant"}, where);
    return Bye{get_id(p, "participant", where)};
  }
  bad("unknown message kind '" + std::string(kind) + "'");
}

// ---------------------------------------------------------------- sockets

class Fd {
 public:
  Fd() = default;
  explicit Fd(int fd) : fd_(fd) {}
  Fd(Fd&& o) noexcept : fd_(std::exchange(o.fd_, -1)) {}
  Fd& operator=(Fd&& o) noexcept {
    if (this != &o) {
      reset();
      fd_ = std::exchange(o.fd_, -1);
    }
    return *this;
  }
  ~Fd() { reset(); }
  int get() const { return fd_; }
  void reset() {
    if (fd_ >= 0) ::close(fd_);
    fd_ = -1;
  }

 private:
  int fd_ = -1;
};

std::string errno_text() { return std::strerror(errno); }

void send_line(int fd, const std::string& line) {
  std::string data = line + "\n";
  std::size_t off = 0;
  while (off < data.size()) {
    const auto n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
    if (n < 0 && errno == EINTR) continue;
    if (n <= 0) bad("connection lost while sending: " + errno_text());
    off += static_cast<std::size_t>(n);
  }
}

/// Buffered newline framing with a hard cap on line length.
class LineReader {
 public:
  LineReader(int fd, std::size_t max_line_bytes) : fd_(fd), max_(max_line_bytes) {}

  /// Next line without its newline, or nullopt at end of stream. A negative
  /// timeout waits indefinitely.
  std::optional<std::string> next(double timeout_s = -1.0) {
    const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(
                                             std::chrono::duration<double>(std::max(timeout_s, 0.0)));
    for (;;) {
      const auto nl = buf_.find('\n', scanned_);
      if (nl != std::string::npos) {
        std::string line = buf_.substr(0, nl);
        buf_.erase(0, nl + 1);
        scanned_ = 0;
        if (line.size() > max_) too_long();
        return line;
      }
      scanned_ = buf_.size();
      if (buf_.size() > max_) too_long();
      if (timeout_s >= 0.0) {
        const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now()).count();
        pollfd pfd{fd_, POLLIN, 0};
        const int r = ::poll(&pfd, 1, static_cast<int>(std::max<long long>(left, 0)));
        if (r < 0 && errno == EINTR) continue;
        if (r < 0) bad("poll failed: " + errno_text());
        if (r == 0) bad("timed out after " + std::to_string(timeout_s) + " s waiting for a message");
      }
      char chunk[65536];
      const auto n = ::recv(fd_, chunk, sizeof chunk, 0);
      if (n < 0 && errno == EINTR) continue;
      if (n < 0) bad("connection lost while receiving: " + errno_text());
      if (n == 0) {
        if (!buf_.empty()) bad("connection closed in the middle of a message");
        return std::nullopt;
      }
      buf_.append(chunk, static_cast<std::size_t>(n));
    }
  }

 private:
  [[noreturn]] void too_long() const { bad("message line exceeds " + std::to_string(max_) + " bytes"); }

  int fd_;
  std::size_t max_;
  std::string buf_;
  std::size_t scanned_ = 0;
};

addrinfo* resolve(const Endpoint& ep, bool passive) {
  addrinfo hints{};
  hints.ai_family = AF_INET;
  hints.ai_socktype = SOCK_STREAM;
  if (passive) hints.ai_flags = AI_PASSIVE;
  addrinfo* res = nullptr;
  const auto port = std::to_string(ep.port);
  const int rc = ::getaddrinfo(ep.host.empty() ? nullptr : ep.host.c_str(), port.c_str(), &hints, &res);
  if (rc != 0) bad("cannot resolve " + ep.host + ": " + ::gai_strerror(rc));
  return res;
}

Fd connect_with_retry(const Endpoint& ep, double timeout_s) {
  const auto deadline = Clock::now() + std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(timeout_s));
  std::string last;
  for (;;) {
    addrinfo* res = resolve(ep, false);
    for (auto* ai = res; ai; ai = ai->ai_next) {
      Fd fd(::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol));
      if (fd.get() < 0) continue;
      if (::connect(fd.get(), ai->ai_addr, ai->ai_addrlen) == 0) {
        ::freeaddrinfo(res);
        return fd;
      }
      last = errno_text();
    }
    ::freeaddrinfo(res);
    if (Clock::now() >= deadline)
      bad("cannot connect to " + ep.host + ":" + std::to_string(ep.port) + ": " + last);
    std::this_thread::sleep_for(std::chrono::milliseconds(50));
  }
}

template <class T>
T expect(const Message& m, std::string_view wanted) {
  if (const auto* e = std::get_if<Error>(&m)) bad("coordinator error: " + e->message);
  const auto* v = std::get_if<T>(&m);
  if (!v) bad("expected " + std::string(wanted) + ", got " + std::string(kind_name(m)));
  return *v;
}

// ---------------------------------------------------------------- coordinator state

enum class Phase { Registering, Collecting, Aggregated, Closed };

struct RoundState {
  std::mutex mu;
  std::condition_variable cv;
  Phase phase = Phase::Registering;
  std::map<int, LabelSpace> spaces;
  std::map<int, PredictionVector> predictions;
  std::map<int, PseudolabelBundle> bundles;
  std::set<int> delivered;
  std::optional<std::string> abort_reason;
  std::uint64_t progress = 0;

  void abort(const std::string& reason) {
    if (!abort_reason) abort_reason = reason;
    ++progress;
    cv.notify_all();
  }
};

class CaptureLog {
 public:
  explicit CaptureLog(const std::filesystem::path& path) {
    if (path.empty()) return;
    out_.open(path, std::ios::binary | std::ios::trunc);
    if (!out_) throw std::runtime_error("cannot open capture file " + path.string());
  }
  void write(const std::string& line) {
    if (!out_.is_open()) return;
    std::lock_guard lock(mu_);
    out_ << line << '\n';
    out_.flush();
  }

 private:
  std::mutex mu_;
  std::ofstream out_;
};

class Session {
 public:
  Session(const CoordinatorSettings& s, RoundState& state, CaptureLog& capture, int fd)
      : s_(s), state_(state), capture_(capture), fd_(fd), reader_(fd, s.max_line_bytes) {}

  void run() {
    try {
      serve();
    } catch (const std::exception& e) {
      fail(e.what());
    }
  }

 private:
  void send(const Message& m) {
    const auto line = encode(m);
    capture_.write(line);
    send_line(fd_, line);
  }

  void send_error(const std::string& text) {
    try {
      send(Error{text});
    } catch (const std::exception&) {
    }
  }

  /// Before registration a bad connection is only dropped; afterwards the
  /// round cannot complete and is aborted.
  void fail(const std::string& text) {
    if (me_ >= 0) {
      std::lock_guard lock(state_.mu);
      state_.abort("participant " + std::to_string(me_) + ": " + text);
    }
    send_error(text);
  }

  std::optional<Message> receive(double timeout_s = -1.0) {
    auto line = reader_.next(timeout_s);
    if (!line) return std::nullopt;
    capture_.write(*line);
    return decode(*line);
  }

  void serve() {
    auto first = receive();
    if (!first) return;
    const auto* reg = std::get_if<Register>(&*first);
    if (!reg) bad("expected REGISTER, got " + std::string(kind_name(*first)));
    const auto known = std::find_if(s_.participants.begin(), s_.participants.end(),
                                    [&](const auto& p) { return p.id == reg->participant; });
    if (known == s_.participants.end()) bad("participant " + std::to_string(reg->participant) + " is not expected");
    if (reg->n_local == 0) bad("participant " + std::to_string(reg->participant) + " has an empty local dataset");
    if (reg->label_space.size() == 0) bad("participant " + std::to_string(reg->participant) + " declares no categories");
    {
      std::lock_guard lock(state_.mu);
      if (state_.abort_reason) bad("round aborted: " + *state_.abort_reason);
      if (state_.spaces.contains(reg->participant))
        bad("participant " + std::to_string(reg->participant) + " is already registered");
      if (state_.phase != Phase::Registering) bad("registration is closed");
      state_.spaces.emplace(reg->participant, reg->label_space);
      if (state_.spaces.size() == s_.participants.size()) state_.phase = Phase::Collecting;
      ++state_.progress;
      state_.cv.notify_all();
    }
    me_ = reg->participant;
    const auto space = reg->label_space;
    send(RegisterAck{me_, s_.public_size, s_.public_sha256, static_cast<int>(s_.participants.size())});

    auto second = receive();
    {
      std::lock_guard lock(state_.mu);
      if (state_.abort_reason) {
        send_error("round aborted: " + *state_.abort_reason);
        return;
      }
    }
    if (!second) bad("disconnected before sending predictions");
    const auto* pred = std::get_if<Predictions>(&*second);
    if (!pred) bad("expected PREDICTIONS, got " + std::string(kind_name(*second)));
    if (pred->participant != me_)
      bad("PREDICTIONS names participant " + std::to_string(pred->participant) + " on a connection registered as " +
          std::to_string(me_));
    if (pred->predictions.size() != s_.public_size)
      bad("prediction vector has length " + std::to_string(pred->predictions.size()) + ", expected " +
          std::to_string(s_.public_size));
    for (std::size_t j = 0; j < pred->predictions.size(); ++j)
      if (!space.contains(pred->predictions[j]))
        bad("prediction at index " + std::to_string(j) + " is category " + std::to_string(pred->predictions[j].value) +
            ", outside the declared label space");

    PseudolabelBundle bundle;
    {
      std::unique_lock lock(state_.mu);
      state_.predictions.emplace(me_, pred->predictions);
      ++state_.progress;
      state_.cv.notify_all();
      state_.cv.wait(lock, [&] { return state_.abort_reason || state_.phase >= Phase::Aggregated; });
      if (state_.abort_reason) {
        const auto reason = *state_.abort_reason;
        lock.unlock();
        send_error("round aborted: " + reason);
        return;
      }
      bundle = state_.bundles.at(me_);
    }
    send(Bundle{bundle});
    {
      std::lock_guard lock(state_.mu);
      state_.delivered.insert(me_);
      ++state_.progress;
      state_.cv.notify_all();
    }
    // The round is done for this participant; a trailing BYE is optional.
    try {
      receive(s_.timeout_s);
    } catch (const std::exception&) {
    }
  }

  const CoordinatorSettings& s_;
  RoundState& state_;
  CaptureLog& capture_;
  int fd_;
  LineReader reader_;
  int me_ = -1;
};

}  // namespace

std::string_view kind_name(const Message& message) {
  static constexpr std::string_view names[] = {"REGISTER", "REGISTER_ACK", "PREDICTIONS", "BUNDLE", "ERROR", "BYE"};
  return names[message.index()];
}

std::string encode(const Message& message, int version) {
  json payload = std::visit([](const auto& m) { return payload_of(m); }, message);
  json j{{"v", version}, {"kind", std::string(kind_name(message))}, {"payload", std::move(payload)}};
  return j.dump();
}

Message decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    bad(std::string("malformed message: ") + e.what());
  }
  expect_keys(j, {"v", "kind", "payload"}, "message");
  const auto v = get_int(j, "v", "message");
  if (v != kProtocolVersion)
    bad("protocol version mismatch: got " + std::to_string(v) + ", expected " + std::to_string(kProtocolVersion));
  return decode_payload(get_string(j, "kind", "message"), j.at("payload"));
}

Endpoint parse_endpoint(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) throw ConfigError("address '" + text + "' must be host:port");
  Endpoint ep;
  ep.host = text.substr(0, colon);
  const auto port = text.substr(colon + 1);
  unsigned long value = 0;
  std::size_t used = 0;
  try {
    value = std::stoul(port, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (port.empty() || used != port.size() || value > 65535) throw ConfigError("address '" + text + "' has a bad port");
  ep.port = static_cast<std::uint16_t>(value);
  return ep;
}

Coordinator::Coordinator(CoordinatorSettings settings) : settings_(std::move(settings)) {
  if (settings_.participants.empty()) throw std::invalid_argument("coordinator needs at least one participant");
  if (settings_.public_size == 0) throw std::invalid_argument("coordinator needs a non-empty public set");
  if (!(settings_.alpha >= 0.0 && settings_.alpha <= 1.0)) throw std::invalid_argument("alpha must lie in [0, 1]");
  addrinfo* res = resolve(settings_.bind, true);
  std::string last = "no usable address";
  for (auto* ai = res; ai && listen_fd_ < 0; ai = ai->ai_next) {
    const int fd = ::socket(ai->ai_family, ai->ai_socktype, ai->ai_protocol);
    if (fd < 0) continue;
    const int one = 1;
    ::setsockopt(fd, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
    if (::bind(fd, ai->ai_addr, ai->ai_addrlen) == 0 && ::listen(fd, 64) == 0) {
      listen_fd_ = fd;
    } else {
      last = errno_text();
      ::close(fd);
    }
  }
  ::freeaddrinfo(res);
  if (listen_fd_ < 0)
    throw std::runtime_error("cannot listen on " + settings_.bind.host + ":" + std::to_string(settings_.bind.port) +
                             ": " + last);
  sockaddr_in addr{};
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

Coordinator::~Coordinator() {
  if (listen_fd_ >= 0) ::close(listen_fd_);
}

CoordinatorResult Coordinator::run() {
  const auto& s = settings_;
  const auto n = s.participants.size();
  RoundState state;
  CaptureLog capture(s.capture);

  std::mutex conns_mu;
  std::vector<int> fds;
  std::vector<std::thread> sessions;
  std::atomic<bool> stop{false};

  std::thread acceptor([&] {
    while (!stop) {
      pollfd pfd{listen_fd_, POLLIN, 0};
      if (::poll(&pfd, 1, 100) <= 0) continue;
      const int fd = ::accept(listen_fd_, nullptr, nullptr);
      if (fd < 0) continue;
      std::lock_guard lock(conns_mu);
      if (stop) {
        ::close(fd);
        break;
      }
      fds.push_back(fd);
      sessions.emplace_back([&, fd] { Session(s, state, capture, fd).run(); });
    }
  });

  CoordinatorResult result;
  const auto timeout = std::chrono::duration_cast<Clock::duration>(std::chrono::duration<double>(s.timeout_s));
  {
    std::unique_lock lock(state.mu);
    for (;;) {
      if (state.abort_reason) break;
      if (state.phase < Phase::Aggregated && state.predictions.size() == n) {
        // Barrier reached: aggregate exactly once, in configured participant order.
        try {
          std::vector<double> weights;
          for (const auto& p : s.participants) {
            result.ids.push_back(p.id);
            result.spaces.push_back(state.spaces.at(p.id));
            result.predictions.push_back(state.predictions.at(p.id));
            weights.push_back(p.weight);
          }
          result.pseudolabels = aggregate_votes(result.predictions, result.spaces, weights, s.alpha, s.public_size);
          for (std::size_t i = 0; i < n; ++i) {
            result.bundles.push_back(build_bundle(result.pseudolabels, result.spaces[i], result.ids[i], s.conflict_scope));
            state.bundles.emplace(result.ids[i], result.bundles.back());
          }
          state.phase = Phase::Aggregated;
          ++state.progress;
          state.cv.notify_all();
        } catch (const std::exception& e) {
          state.abort(std::string("aggregation failed: ") + e.what());
          break;
        }
      }
      if (state.phase == Phase::Aggregated && state.delivered.size() == n) {
        state.phase = Phase::Closed;
        break;
      }
      const auto seen = state.progress;
      if (!state.cv.wait_for(lock, timeout, [&] { return state.progress != seen; })) {
        state.abort("timed out after " + std::to_string(s.timeout_s) + " s with " + std::to_string(state.spaces.size()) +
                    " of " + std::to_string(n) + " participants registered and " +
                    std::to_string(state.predictions.size()) + " prediction vectors received");
        break;
      }
    }
  }

  stop = true;
  acceptor.join();
  const bool aborted = state.phase != Phase::Closed;
  if (aborted) {
    // Wake sessions blocked on reads; they reply with ERROR and exit.
    std::lock_guard lock(conns_mu);
    for (int fd : fds) ::shutdown(fd, SHUT_RD);
  }
  for (auto& t : sessions) t.join();
  for (int fd : fds) ::close(fd);
  if (aborted) bad("round aborted: " + *state.abort_reason);
  return result;
}

JoinResult join(const Endpoint& coordinator, int participant, const FederationConfig& config,
                const std::filesystem::path& manifest_path, double timeout_s, std::size_t max_line_bytes) {
  const auto manifest = load_manifest(manifest_path);
  check_compatible(config, manifest);
  const auto slot = std::find_if(config.participants.begin(), config.participants.end(),
                                 [&](const auto& p) { return p.id == participant; });
  if (slot == config.participants.end())
    throw ConfigError("participant " + std::to_string(participant) + " is not in the config");
  const auto& pc = *slot;
  const auto data = load_participant(manifest_path, manifest, participant);
  const auto pub = load_public_set(manifest_path, manifest);

  Fd fd = connect_with_retry(coordinator, timeout_s);
  LineReader reader(fd.get(), max_line_bytes);
  auto receive = [&]() -> Message {
    auto line = reader.next(timeout_s);
    if (!line) bad("coordinator closed the connection");
    return decode(*line);
  };

  send_line(fd.get(), encode(Register{participant, data.space, data.train.size()}));
  const auto ack = expect<RegisterAck>(receive(), "REGISTER_ACK");
  if (ack.participant != participant) bad("REGISTER_ACK is addressed to participant " + std::to_string(ack.participant));
  if (ack.public_sha256 != manifest.unlabeled_sha256)
    bad("public dataset hash mismatch: coordinator has " + ack.public_sha256 + ", local file has " +
        manifest.unlabeled_sha256);
  if (ack.m != pub.size())
    bad("public dataset size mismatch: coordinator has " + std::to_string(ack.m) + ", local file has " +
        std::to_string(pub.size()));

  auto train = pc.train;
  train.seed = local_seed(config, participant);
  const auto model = train_local(pc.learner, data.space, data.train, train);
  JoinResult result;
  result.local_predictions = pseudolabel(*model, pub);
  send_line(fd.get(), encode(Predictions{participant, result.local_predictions}));

  result.bundle = expect<Bundle>(receive(), "BUNDLE").bundle;
  if (result.bundle.owner != participant) bad("received a bundle for participant " + std::to_string(result.bundle.owner));
  send_line(fd.get(), encode(Bye{participant}));
  fd.reset();

  auto update = update_participant(config, pc, data, *model, result.bundle, pub);
  result.outcome = update.outcome;
  result.federated_predictions = std::move(update.federated_predictions);
  return result;
}

CoordinatorSettings coordinator_settings(const RunConfig& config, const std::filesystem::path& manifest_path) {
  const auto manifest = load_manifest(manifest_path);
  check_compatible(config.federation, manifest);
  const auto file = (manifest_path.has_parent_path() ? manifest_path.parent_path() : ".") / manifest.unlabeled_file;
  const auto actual = sha256_file(file);
  if (actual != manifest.unlabeled_sha256)
    throw std::runtime_error("hash mismatch for " + file.string() + ": manifest says " + manifest.unlabeled_sha256 +
                             ", file has " + actual);
  CoordinatorSettings s;
  s.bind = parse_endpoint(config.serve.bind);
  s.participants = config.federation.participants;
  s.alpha = config.federation.alpha;
  s.conflict_scope = config.federation.conflict_scope;
  s.public_size = manifest.unlabeled_size;
  s.public_sha256 = manifest.unlabeled_sha256;
  s.timeout_s = config.serve.timeout_s;
  s.max_line_bytes = config.serve.max_line_bytes;
  s.capture = config.serve.capture;
  return s;
}

}  // namespace cofed::net
