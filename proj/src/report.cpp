#include "sepinv/report.hpp"

#include <cctype>

namespace sepinv {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

// Inverse of Value::str.
Value parse_value(const std::string& s) {
  try {
    if (s == "undef") return Value::bad();
    if (s.rfind("loc(", 0) == 0 && s.back() == ')') return Value::loc(std::stoll(s.substr(4, s.size() - 5)), "");
    if (s.rfind("&(", 0) == 0 && s.back() == ')') {
      auto arrow = s.find("->");
      if (arrow == std::string::npos) throw ReportError("bad value " + s);
      return Value::loc(std::stoll(s.substr(2, arrow - 2)), s.substr(arrow + 2, s.size() - arrow - 3));
    }
    std::size_t used = 0;
    auto n = std::stoll(s, &used);
    if (used != s.size()) throw ReportError("bad value " + s);
    return Value::integer(n);
  } catch (const std::logic_error&) {
    throw ReportError("bad value " + s);
  }
}

// Splits "a, b, c" inside one brace group.
std::vector<std::string> split_items(const std::string& body) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start < body.size()) {
    auto comma = body.find(", ", start);
    if (comma == std::string::npos) comma = body.size();
    out.push_back(body.substr(start, comma - start));
    start = comma + 2;
  }
  return out;
}

// Inverse of ConcreteHeap::str.
ConcreteHeap parse_heap(const std::string& s) {
  const std::string a = "store {", b = "} heap {";
  auto mid = s.find(b);
  if (s.rfind(a, 0) != 0 || mid == std::string::npos || s.back() != '}') throw ReportError("bad model " + s);
  ConcreteHeap m;
  for (const auto& item : split_items(s.substr(a.size(), mid - a.size()))) {
    auto colon = item.find(':');
    if (colon == std::string::npos) throw ReportError("bad store entry " + item);
    m.store[item.substr(0, colon)] = parse_value(item.substr(colon + 1));
  }
  std::string cells = s.substr(mid + b.size(), s.size() - mid - b.size() - 1);
  for (const auto& item : split_items(cells)) {
    auto eq = item.rfind('=');
    if (eq == std::string::npos) throw ReportError("bad cell " + item);
    m.cells[parse_value(item.substr(0, eq))] = parse_value(item.substr(eq + 1));
  }
  return m;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ReportError("report: " + what);
}

void require_fields(const json& j, std::initializer_list<std::pair<const char*, json::value_t>> fields,
                    const std::string& where) {
  require(j.is_object(), where + " is not an object");
  for (const auto& [name, type] : fields) {
    require(j.contains(name), where + " lacks '" + name + "'");
    const json& v = j.at(name);
    bool ok = v.type() == type ||
              (type == json::value_t::number_float && v.is_number()) ||
              (type == json::value_t::number_unsigned && v.is_number_integer() && v.get<long long>() >= 0) ||
              (type == json::value_t::number_integer && v.is_number_integer());
    require(ok, where + "." + name + " has the wrong type");
  }
}

void validate_timing(const json& j, const std::string& where) {
  require_fields(j,
                 {{"symbolic", json::value_t::number_float},
                  {"infer", json::value_t::number_float},
                  {"solver", json::value_t::number_float}},
                 where);
}

void validate_invariant(const json& j, const std::string& where) {
  require_fields(j,
                 {{"success", json::value_t::boolean},
                  {"failure", json::value_t::string},
                  {"invariant", json::value_t::string},
                  {"states", json::value_t::array},
                  {"trace", json::value_t::array},
                  {"pre_entails_inv", json::value_t::boolean},
                  {"inductive", json::value_t::boolean},
                  {"attempts", json::value_t::number_integer},
                  {"banned", json::value_t::array},
                  {"inner", json::value_t::array},
                  {"timing", json::value_t::object}},
                 where);
  for (const auto& s : j.at("states")) require(s.is_string(), where + ".states holds a non-string");
  for (const auto& s : j.at("banned")) require(s.is_string(), where + ".banned holds a non-string");
  for (const auto& t : j.at("trace"))
    require_fields(t,
                   {{"candidate", json::value_t::string},
                    {"succ", json::value_t::number_unsigned},
                    {"fail", json::value_t::number_unsigned},
                    {"depth", json::value_t::number_integer}},
                   where + ".trace[]");
  for (const auto& i : j.at("inner")) validate_invariant(i, where + ".inner[]");
  validate_timing(j.at("timing"), where + ".timing");
}

Timing timing_from(const json& j) {
  return {j.at("symbolic").get<double>(), j.at("infer").get<double>(), j.at("solver").get<double>()};
}

InvariantReport invariant_from(const json& j, const PredicateRegistry& preds) {
  InvariantReport r;
  r.success = j.at("success").get<bool>();
  r.failure = j.at("failure").get<std::string>();
  r.invariant = parse_assertion(j.at("invariant").get<std::string>(), &preds);
  for (const auto& s : j.at("states")) r.states.push_back(parse_assertion(s.get<std::string>(), &preds));
  for (const auto& t : j.at("trace"))
    r.trace.push_back({t.at("candidate").get<std::string>(), t.at("succ").get<std::size_t>(),
                       t.at("fail").get<std::size_t>(), t.at("depth").get<int>()});
  r.pre_entails_inv = j.at("pre_entails_inv").get<bool>();
  r.inductive = j.at("inductive").get<bool>();
  r.attempts = j.at("attempts").get<int>();
  for (const auto& b : j.at("banned")) r.banned.push_back(b.get<std::string>());
  for (const auto& i : j.at("inner")) r.inner.push_back(invariant_from(i, preds));
  r.timing = timing_from(j.at("timing"));
  return r;
}

}  // namespace

ordered_json to_json(const Timing& t) {
  return {{"symbolic", t.symbolic}, {"infer", t.infer}, {"solver", t.solver}};
}

ordered_json to_json(const InvariantReport& r) {
  ordered_json j;
  j["success"] = r.success;
  j["failure"] = r.failure;
  j["invariant"] = r.invariant.str();
  j["states"] = ordered_json::array();
  for (const auto& s : r.states) j["states"].push_back(s.str());
  j["trace"] = ordered_json::array();
  for (const auto& t : r.trace)
    j["trace"].push_back({{"candidate", t.candidate}, {"succ", t.succ}, {"fail", t.fail}, {"depth", t.depth}});
  j["pre_entails_inv"] = r.pre_entails_inv;
  j["inductive"] = r.inductive;
  j["attempts"] = r.attempts;
  j["banned"] = r.banned;
  j["inner"] = ordered_json::array();
  for (const auto& i : r.inner) j["inner"].push_back(to_json(i));
  j["timing"] = to_json(r.timing);
  return j;
}

ordered_json to_json(const VerifyRecord& rec) {
  const FunctionReport& r = rec.report;
  ordered_json j;
  j["name"] = r.name;
  j["verified"] = r.verified;
  j["failure"] = r.failure;
  j["post_ok"] = r.post_ok;
  j["loops"] = ordered_json::array();
  for (const auto& l : r.loops) j["loops"].push_back(to_json(l));
  j["oracle"] = ordered_json::array();
  for (const auto& c : rec.oracle) {
    ordered_json o;
    o["pre_ok"] = c.pre_ok;
    o["step_ok"] = c.step_ok;
    o["detail"] = c.detail;
    o["models"] = c.models;
    o["counter_model"] = c.counter_model ? ordered_json(c.counter_model->str()) : ordered_json(nullptr);
    j["oracle"].push_back(std::move(o));
  }
  j["timing"] = to_json(r.timing);
  j["seconds"] = r.seconds;
  return j;
}

ordered_json make_report(const std::string& file, const std::string& backend,
                         const std::vector<VerifyRecord>& records) {
  ordered_json j;
  j["report_version"] = kReportVersion;
  j["file"] = file;
  j["backend"] = backend;
  j["functions"] = ordered_json::array();
  for (const auto& r : records) j["functions"].push_back(to_json(r));
  return j;
}

void validate_report(const json& j) {
  require_fields(j,
                 {{"report_version", json::value_t::number_integer},
                  {"file", json::value_t::string},
                  {"backend", json::value_t::string},
                  {"functions", json::value_t::array}},
                 "report");
  require(j.at("report_version").get<int>() == kReportVersion, "unsupported report_version");
  for (const auto& f : j.at("functions")) {
    require_fields(f,
                   {{"name", json::value_t::string},
                    {"verified", json::value_t::boolean},
                    {"failure", json::value_t::string},
                    {"post_ok", json::value_t::boolean},
                    {"loops", json::value_t::array},
                    {"oracle", json::value_t::array},
                    {"timing", json::value_t::object},
                    {"seconds", json::value_t::number_float}},
                   "function");
    for (const auto& l : f.at("loops")) validate_invariant(l, "loop");
    for (const auto& o : f.at("oracle")) {
      require_fields(o,
                     {{"pre_ok", json::value_t::boolean},
                      {"step_ok", json::value_t::boolean},
                      {"detail", json::value_t::string},
                      {"models", json::value_t::number_unsigned}},
                     "oracle");
      require(o.contains("counter_model") && (o.at("counter_model").is_null() || o.at("counter_model").is_string()),
              "oracle.counter_model must be a string or null");
    }
    validate_timing(f.at("timing"), "function.timing");
  }
}

std::vector<VerifyRecord> records_from_report(const json& j, const PredicateRegistry& preds) {
  validate_report(j);
  std::vector<VerifyRecord> out;
  for (const auto& f : j.at("functions")) {
    VerifyRecord rec;
    FunctionReport& r = rec.report;
    r.name = f.at("name").get<std::string>();
    r.verified = f.at("verified").get<bool>();
    r.failure = f.at("failure").get<std::string>();
    r.post_ok = f.at("post_ok").get<bool>();
    for (const auto& l : f.at("loops")) r.loops.push_back(invariant_from(l, preds));
    for (const auto& o : f.at("oracle")) {
      InvariantCheck c;
      c.pre_ok = o.at("pre_ok").get<bool>();
      c.step_ok = o.at("step_ok").get<bool>();
      c.detail = o.at("detail").get<std::string>();
      c.models = o.at("models").get<std::size_t>();
      if (o.at("counter_model").is_string()) c.counter_model = parse_heap(o.at("counter_model").get<std::string>());
      rec.oracle.push_back(std::move(c));
    }
    r.timing = timing_from(f.at("timing"));
    r.seconds = f.at("seconds").get<double>();
    out.push_back(std::move(rec));
  }
  return out;
}

}  // namespace sepinv
