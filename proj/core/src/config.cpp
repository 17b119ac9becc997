#include "ssgn/config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "ssgn/error.hpp"

namespace ssgn {

namespace {

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const long long out = std::stoll(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config: key " + key + " needs an integer, got '" + v + "'");
  }
}

double to_double(const std::string& key, const std::string& v) {
  try {
    size_t pos = 0;
    const double out = std::stod(v, &pos);
    if (pos != v.size()) throw std::invalid_argument(v);
    return out;
  } catch (const std::exception&) {
    throw DataError("config: key " + key + " needs a number, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw DataError("config: key " + key + " needs true/false, got '" + v + "'");
}

std::vector<long long> to_int_list(const std::string& key, const std::string& v) {
  std::vector<long long> out;
  if (trim(v).empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_int(key, trim(item)));
  return out;
}

std::string bool_str(bool b) { return b ? "true" : "false"; }

std::string double_str(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  if (key == "seed") seed = static_cast<uint64_t>(to_int(key, value));
  else if (key == "data_dir") data_dir = value;
  else if (key == "out_dir") out_dir = value;
  else if (key == "resume") resume = value;
  else if (key == "d") model.d = static_cast<int>(to_int(key, value));
  else if (key == "heads") model.heads = static_cast<int>(to_int(key, value));
  else if (key == "encoder_layers") model.encoder_layers = static_cast<int>(to_int(key, value));
  else if (key == "decoder_layers") model.decoder_layers = static_cast<int>(to_int(key, value));
  else if (key == "hierarchy") model.hierarchy = hierarchy_from_string(value);
  else if (key == "sparse_otsg") model.sparse_otsg = to_bool(key, value);
  else if (key == "sparse_osg") model.sparse_osg = to_bool(key, value);
  else if (key == "sparse_tsg") model.sparse_tsg = to_bool(key, value);
  else if (key == "max_answer_len") model.max_answer_len = static_cast<int>(to_int(key, value));
  else if (key == "max_question_len")
    model.max_question_len = static_cast<int>(to_int(key, value));
  else if (key == "theta") prune.theta = to_double(key, value);
  else if (key == "epsilon") prune.epsilon = to_double(key, value);
  else if (key == "alpha") prune.alpha = to_double(key, value);
  else if (key == "beta") prune.beta = to_double(key, value);
  else if (key == "gamma") prune.gamma = to_double(key, value);
  else if (key == "delta") prune.delta = to_double(key, value);
  else if (key == "lr") lr = to_double(key, value);
  else if (key == "lr_decay") lr_decay = to_double(key, value);
  else if (key == "milestones") milestones = to_int_list(key, value);
  else if (key == "lambda") lambda = to_double(key, value);
  else if (key == "steps") steps = to_int(key, value);
  else if (key == "eval_every") eval_every = to_int(key, value);
  else throw DataError("config: unknown key " + key);
}

std::string RunConfig::serialize() const {
  std::ostringstream out;
  out << "alpha = " << double_str(prune.alpha) << "\n";
  out << "beta = " << double_str(prune.beta) << "\n";
  out << "d = " << model.d << "\n";
  out << "data_dir = " << data_dir << "\n";
  out << "decoder_layers = " << model.decoder_layers << "\n";
  out << "delta = " << double_str(prune.delta) << "\n";
  out << "encoder_layers = " << model.encoder_layers << "\n";
  out << "epsilon = " << double_str(prune.epsilon) << "\n";
  out << "eval_every = " << eval_every << "\n";
  out << "gamma = " << double_str(prune.gamma) << "\n";
  out << "heads = " << model.heads << "\n";
  out << "hierarchy = " << to_string(model.hierarchy) << "\n";
  out << "lambda = " << double_str(lambda) << "\n";
  out << "lr = " << double_str(lr) << "\n";
  out << "lr_decay = " << double_str(lr_decay) << "\n";
  out << "max_answer_len = " << model.max_answer_len << "\n";
  out << "max_question_len = " << model.max_question_len << "\n";
  std::string ms;
  for (size_t i = 0; i < milestones.size(); ++i) {
    if (i) ms += ",";
    ms += std::to_string(milestones[i]);
  }
  out << "milestones = " << ms << "\n";
  out << "out_dir = " << out_dir << "\n";
  out << "resume = " << resume << "\n";
  out << "seed = " << seed << "\n";
  out << "sparse_osg = " << bool_str(model.sparse_osg) << "\n";
  out << "sparse_otsg = " << bool_str(model.sparse_otsg) << "\n";
  out << "sparse_tsg = " << bool_str(model.sparse_tsg) << "\n";
  out << "steps = " << steps << "\n";
  out << "theta = " << double_str(prune.theta) << "\n";
  return out.str();
}

void RunConfig::apply_text(const std::string& text) {
  std::stringstream ss(text);
  std::string line;
  int line_no = 0;
  while (std::getline(ss, line)) {
    ++line_no;
    const std::string stripped = trim(line.substr(0, line.find('#')));
    if (stripped.empty()) continue;
    const size_t eq = stripped.find('=');
    if (eq == std::string::npos) {
      throw DataError("config: line " + std::to_string(line_no) + " is not key = value");
    }
    set(trim(stripped.substr(0, eq)), trim(stripped.substr(eq + 1)));
  }
}

RunConfig RunConfig::from_text(const std::string& text) {
  RunConfig cfg;
  cfg.apply_text(text);
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("config: cannot open " + path);
  std::string text((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return from_text(text);
}

}  // namespace ssgn
