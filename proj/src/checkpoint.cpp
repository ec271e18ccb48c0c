#include "ddrgs/checkpoint.hpp"

#include "ddrgs/image_io.hpp"

#include <openssl/evp.h>

#include <cstring>
#include <map>

namespace ddrgs {

namespace {

constexpr std::uint32_t make_tag(const char (&s)[5]) {
  return static_cast<std::uint32_t>(static_cast<unsigned char>(s[0])) |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[1])) << 8 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[2])) << 16 |
         static_cast<std::uint32_t>(static_cast<unsigned char>(s[3])) << 24;
}

constexpr std::uint32_t kConf = make_tag("CONF");
constexpr std::uint32_t kPnts = make_tag("PNTS");
constexpr std::uint32_t kTone = make_tag("TONE");
constexpr std::uint32_t kCams = make_tag("CAMS");
constexpr char kMagic[4] = {'D', 'D', 'R', 'S'};

class Writer {
 public:
  std::vector<std::uint8_t> buf;

  template <class T>
  void put(T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    const auto* p = reinterpret_cast<const std::uint8_t*>(&v);
    buf.insert(buf.end(), p, p + sizeof(T));
  }
  void put_vec(const Eigen::VectorXd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) put<double>(v[i]);
  }
  void put_string(const std::string& s) {
    put<std::uint32_t>(static_cast<std::uint32_t>(s.size()));
    buf.insert(buf.end(), s.begin(), s.end());
  }
  void section(std::uint32_t tag, const Writer& body) {
    put(tag);
    put<std::uint64_t>(body.buf.size());
    buf.insert(buf.end(), body.buf.begin(), body.buf.end());
  }
};

class Reader {
 public:
  Reader(const std::uint8_t* p, std::size_t n, const char* what) : p_(p), end_(p + n), what_(what) {}

  template <class T>
  T get() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, p_, sizeof(T));
    p_ += sizeof(T);
    return v;
  }
  Eigen::VectorXd get_vec(int n) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = get<double>();
    return v;
  }
  std::string get_string() {
    const auto n = get<std::uint32_t>();
    need(n);
    std::string s(reinterpret_cast<const char*>(p_), n);
    p_ += n;
    return s;
  }
  [[nodiscard]] bool done() const { return p_ == end_; }
  void expect_done() const {
    if (!done()) throw FormatError(std::string("checkpoint: trailing bytes in section ") + what_);
  }

 private:
  void need(std::size_t n) const {
    if (static_cast<std::size_t>(end_ - p_) < n) throw FormatError(std::string("checkpoint: truncated section ") + what_);
  }
  const std::uint8_t* p_;
  const std::uint8_t* end_;
  const char* what_;
};

}  // namespace

Sha256 sha256(const std::uint8_t* data, std::size_t size) {
  Sha256 out{};
  unsigned int len = 0;
  if (EVP_Digest(data, size, out.data(), &len, EVP_sha256(), nullptr) != 1 || len != out.size()) {
    throw IntegrityError("sha256 computation failed");
  }
  return out;
}

std::string to_hex(const Sha256& digest) {
  static const char* hex = "0123456789abcdef";
  std::string s;
  for (auto b : digest) {
    s.push_back(hex[b >> 4]);
    s.push_back(hex[b & 15]);
  }
  return s;
}

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  const DdrScene& scene = ckpt.scene;
  scene.validate();
  const int hidden = scene.tone_mapper.hidden_width();

  Writer conf;
  conf.put<std::uint32_t>(static_cast<std::uint32_t>(scene.sh_degree));
  conf.put<double>(scene.sh_bias);
  conf.put<std::uint8_t>(scene.sh_bias_learnable ? 1 : 0);
  for (int c = 0; c < 3; ++c) conf.put<double>(scene.background[c]);
  conf.put<std::uint32_t>(static_cast<std::uint32_t>(hidden));
  conf.put<std::uint64_t>(scene.gaussians.size());
  conf.put<std::uint8_t>(ckpt.tone_domain == ToneDomain::linear ? 1 : 0);

  Writer pnts;
  for (const auto& g : scene.gaussians) {
    for (int i = 0; i < 3; ++i) pnts.put<double>(g.position[i]);
    for (int i = 0; i < 4; ++i) pnts.put<double>(g.rotation[i]);
    for (int i = 0; i < 3; ++i) pnts.put<double>(g.log_scale[i]);
    pnts.put<double>(g.opacity_logit);
    for (const auto& k : g.sh_coeffs)
      for (int c = 0; c < 3; ++c) pnts.put<double>(k[c]);
  }

  Writer tone;
  for (const auto& ch : scene.tone_mapper.channels) {
    tone.put_vec(ch.w1);
    tone.put_vec(ch.b1);
    tone.put_vec(ch.w2);
    tone.put<double>(ch.b2);
  }

  Writer out;
  out.buf.insert(out.buf.end(), kMagic, kMagic + 4);
  out.put<std::uint32_t>(kCheckpointVersion);
  out.section(kConf, conf);
  out.section(kPnts, pnts);
  out.section(kTone, tone);
  if (!ckpt.cameras.empty()) {
    Writer cams;
    cams.put<std::uint64_t>(ckpt.cameras.size());
    for (const auto& cam : ckpt.cameras) {
      cams.put_string(cam.id);
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) cams.put<double>(cam.extrinsics(r, c));
      for (double v : {cam.fx(), cam.fy(), cam.cx(), cam.cy()}) cams.put<double>(v);
      cams.put<std::uint32_t>(static_cast<std::uint32_t>(cam.width));
      cams.put<std::uint32_t>(static_cast<std::uint32_t>(cam.height));
      cams.put<double>(cam.exposure_time);
    }
    out.section(kCams, cams);
  }
  const Sha256 d = sha256(out.buf.data(), out.buf.size());
  out.buf.insert(out.buf.end(), d.begin(), d.end());
  return out.buf;
}

namespace {

void verify(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 8 + 32) throw FormatError("checkpoint: file too short");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) throw FormatError("checkpoint: bad magic (expected DDRS)");
  std::uint32_t version;
  std::memcpy(&version, bytes.data() + 4, 4);
  if (version != kCheckpointVersion) {
    throw FormatError("checkpoint: unsupported version " + std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointVersion) + ")");
  }
  const std::size_t body = bytes.size() - 32;
  const Sha256 d = sha256(bytes.data(), body);
  if (std::memcmp(d.data(), bytes.data() + body, 32) != 0) {
    throw IntegrityError("checkpoint: digest mismatch (file corrupted or truncated)");
  }
}

}  // namespace

std::string checkpoint_digest(const std::vector<std::uint8_t>& bytes) {
  verify(bytes);
  Sha256 d;
  std::memcpy(d.data(), bytes.data() + bytes.size() - 32, 32);
  return to_hex(d);
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  verify(bytes);
  std::map<std::uint32_t, std::pair<const std::uint8_t*, std::size_t>> sections;
  const std::uint8_t* base = bytes.data() + 8;
  std::size_t offset = 0;
  const std::size_t total = bytes.size() - 8 - 32;
  while (offset < total) {
    Reader hdr(base + offset, total - offset, "header");
    const auto tag = hdr.get<std::uint32_t>();
    const auto len = hdr.get<std::uint64_t>();
    offset += 12;
    if (len > total - offset) throw FormatError("checkpoint: section length exceeds file");
    if (tag != kConf && tag != kPnts && tag != kTone && tag != kCams) throw FormatError("checkpoint: unknown section tag");
    if (!sections.emplace(tag, std::make_pair(base + offset, static_cast<std::size_t>(len))).second) {
      throw FormatError("checkpoint: duplicate section");
    }
    offset += len;
  }
  for (auto [tag, name] : {std::pair{kConf, "CONF"}, std::pair{kPnts, "PNTS"}, std::pair{kTone, "TONE"}}) {
    if (!sections.count(tag)) throw FormatError(std::string("checkpoint: missing section ") + name);
  }

  Checkpoint ckpt;
  DdrScene& scene = ckpt.scene;
  Reader conf(sections[kConf].first, sections[kConf].second, "CONF");
  scene.sh_degree = static_cast<int>(conf.get<std::uint32_t>());
  if (scene.sh_degree > kMaxShDegree) throw FormatError("checkpoint: sh_degree out of range");
  scene.sh_bias = conf.get<double>();
  scene.sh_bias_learnable = conf.get<std::uint8_t>() != 0;
  for (int c = 0; c < 3; ++c) scene.background[c] = conf.get<double>();
  const auto hidden = conf.get<std::uint32_t>();
  const auto n = conf.get<std::uint64_t>();
  const auto domain = conf.get<std::uint8_t>();
  if (domain > 1) throw FormatError("checkpoint: unknown tone domain " + std::to_string(domain));
  ckpt.tone_domain = domain == 1 ? ToneDomain::linear : ToneDomain::log;
  conf.expect_done();
  if (hidden == 0 || hidden > (1u << 16)) throw FormatError("checkpoint: implausible tone-mapper width");

  const int ncoef = sh_coeff_count(scene.sh_degree);
  const std::size_t per = (3 + 4 + 3 + 1 + 3 * static_cast<std::size_t>(ncoef)) * 8;
  if (sections[kPnts].second != per * n) throw FormatError("checkpoint: PNTS size does not match point count");
  Reader pnts(sections[kPnts].first, sections[kPnts].second, "PNTS");
  scene.gaussians.resize(n);
  for (auto& g : scene.gaussians) {
    for (int i = 0; i < 3; ++i) g.position[i] = pnts.get<double>();
    for (int i = 0; i < 4; ++i) g.rotation[i] = pnts.get<double>();
    for (int i = 0; i < 3; ++i) g.log_scale[i] = pnts.get<double>();
    g.opacity_logit = pnts.get<double>();
    g.sh_coeffs.resize(ncoef);
    for (auto& k : g.sh_coeffs)
      for (int c = 0; c < 3; ++c) k[c] = pnts.get<double>();
  }
  pnts.expect_done();

  Reader tone(sections[kTone].first, sections[kTone].second, "TONE");
  for (auto& ch : scene.tone_mapper.channels) {
    const int h = static_cast<int>(hidden);
    ch.w1 = tone.get_vec(h);
    ch.b1 = tone.get_vec(h);
    ch.w2 = tone.get_vec(h);
    ch.b2 = tone.get<double>();
  }
  tone.expect_done();

  if (auto it = sections.find(kCams); it != sections.end()) {
    Reader cams(it->second.first, it->second.second, "CAMS");
    const auto count = cams.get<std::uint64_t>();
    if (count > it->second.second) throw FormatError("checkpoint: implausible camera count");
    for (std::uint64_t i = 0; i < count; ++i) {
      Camera cam;
      cam.id = cams.get_string();
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c) cam.extrinsics(r, c) = cams.get<double>();
      const double fx = cams.get<double>(), fy = cams.get<double>(), cx = cams.get<double>(), cy = cams.get<double>();
      cam.intrinsics = Camera::pinhole(fx, fy, cx, cy);
      cam.width = static_cast<int>(cams.get<std::uint32_t>());
      cam.height = static_cast<int>(cams.get<std::uint32_t>());
      cam.exposure_time = cams.get<double>();
      ckpt.cameras.push_back(std::move(cam));
    }
    cams.expect_done();
  }
  scene.validate();
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  write_file_bytes(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  try {
    return deserialize_checkpoint(read_file_bytes(path));
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  } catch (const IntegrityError& e) {
    throw IntegrityError(path.string() + ": " + e.what());
  }
}

}  // namespace ddrgs
