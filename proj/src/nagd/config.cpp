#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "mtree/nagd/train.hpp"

namespace mtree::nagd {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T number(const std::string& key, const std::string& value) {
  std::istringstream in(value);
  T out{};
  in >> out;
  if (!in || !(in >> std::ws).eof()) throw InputError("config: bad value for " + key + ": '" + value + "'");
  return out;
}

bool boolean(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "on") return true;
  if (value == "false" || value == "0" || value == "off") return false;
  throw InputError("config: bad boolean for " + key + ": '" + value + "'");
}

using Setter = std::function<void(RunConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = {
      {"d_model", [](RunConfig& c, auto& k, auto& v) { c.hyper.d_model = number<int>(k, v); }},
      {"heads", [](RunConfig& c, auto& k, auto& v) { c.hyper.heads = number<int>(k, v); }},
      {"ffn", [](RunConfig& c, auto& k, auto& v) { c.hyper.ffn = number<int>(k, v); }},
      {"encoder_layers", [](RunConfig& c, auto& k, auto& v) { c.hyper.encoder_layers = number<int>(k, v); }},
      {"depth_cap", [](RunConfig& c, auto& k, auto& v) { c.hyper.depth_cap = number<int>(k, v); }},
      {"focal_gamma", [](RunConfig& c, auto& k, auto& v) { c.hyper.focal_gamma = number<double>(k, v); }},
      {"type_weight", [](RunConfig& c, auto& k, auto& v) { c.hyper.type_weight = number<double>(k, v); }},
      {"cross_goal", [](RunConfig& c, auto& k, auto& v) { c.hyper.cross_goal = boolean(k, v); }},
      {"constants",
       [](RunConfig& c, auto& k, auto& v) {
         c.hyper.constants.clear();
         for (const auto& item : split(v, ',')) {
           try {
             c.hyper.constants.push_back(parse_rational(item));
           } catch (const std::exception&) {
             throw InputError("config: bad constant in " + k + ": '" + item + "'");
           }
         }
       }},
      {"lr", [](RunConfig& c, auto& k, auto& v) { c.optimizer.lr = number<double>(k, v); }},
      {"clip_norm", [](RunConfig& c, auto& k, auto& v) { c.optimizer.clip_norm = number<double>(k, v); }},
      {"seed", [](RunConfig& c, auto& k, auto& v) { c.seed = number<std::uint64_t>(k, v); }},
      {"epochs", [](RunConfig& c, auto& k, auto& v) { c.epochs = number<int>(k, v); }},
      {"batch_size", [](RunConfig& c, auto& k, auto& v) { c.batch_size = number<int>(k, v); }},
      {"target_accuracy", [](RunConfig& c, auto& k, auto& v) { c.target_accuracy = number<double>(k, v); }},
      {"eval_every", [](RunConfig& c, auto& k, auto& v) { c.eval_every = number<int>(k, v); }},
      {"time_budget", [](RunConfig& c, auto& k, auto& v) { c.time_budget = number<double>(k, v); }},
      {"train_count", [](RunConfig& c, auto& k, auto& v) { c.train_count = number<std::size_t>(k, v); }},
      {"test_count", [](RunConfig& c, auto& k, auto& v) { c.test_count = number<std::size_t>(k, v); }},
      {"synthetic_seed", [](RunConfig& c, auto& k, auto& v) { c.synthetic.seed = number<std::uint64_t>(k, v); }},
      {"max_depth", [](RunConfig& c, auto& k, auto& v) { c.synthetic.max_depth = number<int>(k, v); }},
      {"subtree_probability",
       [](RunConfig& c, auto& k, auto& v) { c.synthetic.subtree_probability = number<double>(k, v); }},
      {"min_value", [](RunConfig& c, auto& k, auto& v) { c.synthetic.min_value = number<int>(k, v); }},
      {"max_value", [](RunConfig& c, auto& k, auto& v) { c.synthetic.max_value = number<int>(k, v); }},
      {"branch_distribution",
       [](RunConfig& c, auto& k, auto& v) {
         c.synthetic.branch_distribution.clear();
         for (const auto& item : split(v, ',')) {
           const auto colon = item.find(':');
           if (colon == std::string::npos) throw InputError("config: " + k + " wants arity:weight pairs");
           c.synthetic.branch_distribution[number<int>(k, trim(item.substr(0, colon)))] =
               number<double>(k, trim(item.substr(colon + 1)));
         }
       }},
      {"dataset", [](RunConfig& c, auto&, auto& v) { c.dataset = v; }},
      {"dialect", [](RunConfig& c, auto&, auto& v) { c.dialect = parse_dialect(v); }},
      {"train_fraction", [](RunConfig& c, auto& k, auto& v) { c.train_fraction = number<double>(k, v); }},
      {"checkpoint", [](RunConfig& c, auto&, auto& v) { c.checkpoint = v; }},
      {"metrics_log", [](RunConfig& c, auto&, auto& v) { c.metrics_log = v; }},
  };
  return table;
}

}  // namespace

RunConfig parse_config(std::istream& in) {
  RunConfig c;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw InputError("config line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    it->second(c, key, value);
  }
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config " + path);
  return parse_config(in);
}

std::string render_config(const RunConfig& c) {
  std::ostringstream os;
  os << "d_model = " << c.hyper.d_model << "\n"
     << "heads = " << c.hyper.heads << "\n"
     << "ffn = " << c.hyper.ffn << "\n"
     << "encoder_layers = " << c.hyper.encoder_layers << "\n"
     << "depth_cap = " << c.hyper.depth_cap << "\n"
     << "focal_gamma = " << c.hyper.focal_gamma << "\n"
     << "type_weight = " << c.hyper.type_weight << "\n"
     << "cross_goal = " << (c.hyper.cross_goal ? "true" : "false") << "\n"
     << "constants = ";
  for (std::size_t i = 0; i < c.hyper.constants.size(); ++i) {
    os << (i ? "," : "") << format_rational(c.hyper.constants[i]);
  }
  os << "\nlr = " << c.optimizer.lr << "\n"
     << "clip_norm = " << c.optimizer.clip_norm << "\n"
     << "seed = " << c.seed << "\n"
     << "epochs = " << c.epochs << "\n"
     << "batch_size = " << c.batch_size << "\n"
     << "target_accuracy = " << c.target_accuracy << "\n"
     << "eval_every = " << c.eval_every << "\n"
     << "time_budget = " << c.time_budget << "\n"
     << "train_count = " << c.train_count << "\n"
     << "test_count = " << c.test_count << "\n"
     << "synthetic_seed = " << c.synthetic.seed << "\n"
     << "max_depth = " << c.synthetic.max_depth << "\n"
     << "subtree_probability = " << c.synthetic.subtree_probability << "\n"
     << "min_value = " << c.synthetic.min_value << "\n"
     << "max_value = " << c.synthetic.max_value << "\n"
     << "branch_distribution = ";
  bool first = true;
  for (const auto& [arity, w] : c.synthetic.branch_distribution) {
    os << (first ? "" : ",") << arity << ":" << w;
    first = false;
  }
  os << "\n";
  if (!c.dataset.empty()) {
    os << "dataset = " << c.dataset << "\n"
       << "dialect = " << (c.dialect == Dialect::math23k ? "math23k" : "mawps") << "\n"
       << "train_fraction = " << c.train_fraction << "\n";
  }
  if (!c.checkpoint.empty()) os << "checkpoint = " << c.checkpoint << "\n";
  if (!c.metrics_log.empty()) os << "metrics_log = " << c.metrics_log << "\n";
  return os.str();
}

}  // namespace mtree::nagd
