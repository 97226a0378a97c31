#include "mtree/nagd/checkpoint.hpp"

#include <bit>
#include <fstream>
#include <istream>
#include <ostream>

namespace mtree::nagd {

namespace {

constexpr char kMagic[8] = {'N', 'A', 'G', 'D', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  explicit Writer(std::ostream& out) : out_(out) {}

  void u8(std::uint8_t v) { out_.put(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    out_.write(s.data(), static_cast<std::streamsize>(s.size()));
  }

 private:
  std::ostream& out_;
};

class Reader {
 public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::uint8_t u8() {
    const int c = in_.get();
    if (c == std::char_traits<char>::eof()) throw InputError("checkpoint: truncated");
    return static_cast<std::uint8_t>(c);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return std::bit_cast<double>(bits);
  }
  std::string str() {
    const std::uint32_t n = u32();
    if (n > (1u << 24)) throw InputError("checkpoint: implausible string length");
    std::string s(n, '\0');
    in_.read(s.data(), n);
    if (in_.gcount() != static_cast<std::streamsize>(n)) throw InputError("checkpoint: truncated");
    return s;
  }

 private:
  std::istream& in_;
};

}  // namespace

void save_checkpoint(const Model& model, std::ostream& out) {
  Writer w(out);
  out.write(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  const Hyperparameters& h = model.hyper();
  w.i32(h.d_model);
  w.i32(h.heads);
  w.i32(h.ffn);
  w.i32(h.encoder_layers);
  w.i32(h.depth_cap);
  w.f64(h.focal_gamma);
  w.f64(h.type_weight);
  w.u8(h.cross_goal ? 1 : 0);

  const auto& words = model.vocab().words();
  w.u32(static_cast<std::uint32_t>(words.size()));
  for (const auto& word : words) w.str(word);

  w.u32(static_cast<std::uint32_t>(h.constants.size()));
  for (const auto& c : h.constants) w.str(format_rational(c));

  const auto params = model.parameters();
  w.u32(static_cast<std::uint32_t>(params.size()));
  for (const Parameter* p : params) {
    w.str(p->name);
    w.u32(static_cast<std::uint32_t>(p->value.rows()));
    w.u32(static_cast<std::uint32_t>(p->value.cols()));
    for (Eigen::Index i = 0; i < p->value.size(); ++i) w.f64(p->value.data()[i]);
  }
  if (!out) throw RuntimeError("checkpoint: write failed");
}

void save_checkpoint(const Model& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path);
  save_checkpoint(model, out);
}

Model load_checkpoint(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (in.gcount() != 8 || !std::equal(magic, magic + 8, kMagic)) throw InputError("checkpoint: bad magic");
  Reader r(in);
  if (const auto v = r.u32(); v != kCheckpointVersion) {
    throw InputError("checkpoint: unsupported version " + std::to_string(v));
  }
  Hyperparameters h;
  h.d_model = r.i32();
  h.heads = r.i32();
  h.ffn = r.i32();
  h.encoder_layers = r.i32();
  h.depth_cap = r.i32();
  h.focal_gamma = r.f64();
  h.type_weight = r.f64();
  h.cross_goal = r.u8() != 0;

  std::vector<std::string> words(r.u32());
  for (auto& word : words) word = r.str();
  h.constants.clear();
  const std::uint32_t nc = r.u32();
  for (std::uint32_t i = 0; i < nc; ++i) h.constants.push_back(parse_rational(r.str()));

  Model model(h, Vocabulary(words), 0);
  const auto params = model.parameters();
  if (r.u32() != params.size()) throw InputError("checkpoint: tensor count does not match the model");
  for (Parameter* p : params) {
    const std::string name = r.str();
    const auto rows = static_cast<Eigen::Index>(r.u32());
    const auto cols = static_cast<Eigen::Index>(r.u32());
    if (name != p->name || rows != p->value.rows() || cols != p->value.cols()) {
      throw InputError("checkpoint: unexpected tensor " + name);
    }
    for (Eigen::Index i = 0; i < p->value.size(); ++i) p->value.data()[i] = r.f64();
    p->reset_state();
  }
  return model;
}

Model load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot read " + path);
  return load_checkpoint(in);
}

}  // namespace mtree::nagd
