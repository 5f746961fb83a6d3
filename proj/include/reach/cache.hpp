/* cache.hpp: binary cache for synthesized controllers, keyed by the
 * abstraction geometry hash.  Corrupt or mismatched entries are ignored. */
#ifndef REACH_CACHE_HPP_
#define REACH_CACHE_HPP_

#include <cstdint>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "reach/core.hpp"
#include "reach/synthesis.hpp"

namespace reach {

inline std::string default_cache_dir() {
  if (const char* env = std::getenv("REACH_ENTROPY_CACHE_DIR")) return env;
  if (const char* home = std::getenv("HOME"))
    return std::string(home) + "/.cache/reach-entropy";
  return {};
}

namespace cache_detail {

constexpr std::uint64_t kMagic = 0x5243544c30310a00ull;  // "RCTL01\n"

struct Writer {
  std::string buf;
  void u64(std::uint64_t v) { buf.append(reinterpret_cast<const char*>(&v), sizeof v); }
  void i32(std::int32_t v) { buf.append(reinterpret_cast<const char*>(&v), sizeof v); }
};

struct Reader {
  const std::string& buf;
  std::size_t pos = 0;
  bool ok = true;
  std::uint64_t u64() {
    std::uint64_t v = 0;
    if (pos + sizeof v > buf.size()) {
      ok = false;
      return 0;
    }
    std::memcpy(&v, buf.data() + pos, sizeof v);
    pos += sizeof v;
    return v;
  }
  std::int32_t i32() {
    std::int32_t v = 0;
    if (pos + sizeof v > buf.size()) {
      ok = false;
      return 0;
    }
    std::memcpy(&v, buf.data() + pos, sizeof v);
    pos += sizeof v;
    return v;
  }
};

}  // namespace cache_detail

inline std::string cache_entry_path(const std::string& dir, std::uint64_t key) {
  return dir + "/" + hex64(key) + ".ctl";
}

inline bool save_controller_cache(const std::string& dir, std::uint64_t key,
                                  const ReachController& ctl) {
  if (dir.empty()) return false;
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) return false;
  cache_detail::Writer w;
  w.u64(cache_detail::kMagic);
  w.u64(key);
  w.u64(ctl.num_inputs);
  w.u64(ctl.sweeps);
  w.u64(ctl.assignment.size());
  for (InputId a : ctl.assignment) w.i32(a);
  for (std::int32_t v : ctl.value) w.i32(v);
  w.u64(ctl.domain.size());
  for (StateId s : ctl.domain) w.i32(s);
  w.u64(ctl.candidates.size());
  const std::size_t words = ctl.candidates.empty() ? 0 : ctl.candidates.front().size();
  w.u64(words);
  for (const auto& set : ctl.candidates) {
    if (set.size() != words) return false;
    for (std::uint64_t word : set) w.u64(word);
  }
  w.u64(fnv1a(w.buf));
  const std::string path = cache_entry_path(dir, key);
  std::ofstream out(path + ".tmp", std::ios::binary | std::ios::trunc);
  if (!out) return false;
  out.write(w.buf.data(), static_cast<std::streamsize>(w.buf.size()));
  out.close();
  if (!out) return false;
  std::filesystem::rename(path + ".tmp", path, ec);
  return !ec;
}

inline std::optional<ReachController> load_controller_cache(const std::string& dir,
                                                            std::uint64_t key) {
  if (dir.empty()) return std::nullopt;
  std::ifstream in(cache_entry_path(dir, key), std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  const std::string buf = ss.str();
  if (buf.size() < sizeof(std::uint64_t)) return std::nullopt;
  const std::string payload = buf.substr(0, buf.size() - sizeof(std::uint64_t));
  cache_detail::Reader tail{buf, payload.size()};
  if (tail.u64() != fnv1a(payload)) return std::nullopt;

  cache_detail::Reader r{payload};
  if (r.u64() != cache_detail::kMagic || r.u64() != key) return std::nullopt;
  ReachController ctl;
  ctl.num_inputs = r.u64();
  ctl.sweeps = r.u64();
  const std::uint64_t n = r.u64();
  if (!r.ok || n > (1ull << 32)) return std::nullopt;
  ctl.assignment.resize(n);
  for (auto& a : ctl.assignment) a = r.i32();
  ctl.value.resize(n);
  for (auto& v : ctl.value) v = r.i32();
  const std::uint64_t dn = r.u64();
  if (!r.ok || dn > n) return std::nullopt;
  ctl.domain.resize(dn);
  for (auto& s : ctl.domain) s = r.i32();
  const std::uint64_t cn = r.u64();
  const std::uint64_t words = r.u64();
  if (!r.ok || cn > dn || words > (1ull << 24)) return std::nullopt;
  ctl.candidates.resize(cn);
  for (auto& set : ctl.candidates) {
    set.resize(words);
    for (auto& word : set) word = r.u64();
  }
  if (!r.ok || r.pos != payload.size()) return std::nullopt;
  return ctl;
}

}  // namespace reach

#endif
