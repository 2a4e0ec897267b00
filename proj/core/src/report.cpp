#include "curvelab/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace curvelab {

std::string JsonWriter::format_double(double v) {
  if (std::isnan(v)) return "null";
  if (std::isinf(v)) return v > 0 ? "\"inf\"" : "\"-inf\"";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

void JsonWriter::comma() {
  if (!first_stack_.empty()) {
    if (!first_stack_.back() && !pending_key_) out_ += ',';
    first_stack_.back() = false;
  }
  pending_key_ = false;
}

JsonWriter& JsonWriter::begin_object() {
  comma();
  out_ += '{';
  first_stack_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_object() {
  out_ += '}';
  first_stack_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::begin_array() {
  comma();
  out_ += '[';
  first_stack_.push_back(true);
  return *this;
}

JsonWriter& JsonWriter::end_array() {
  out_ += ']';
  first_stack_.pop_back();
  return *this;
}

JsonWriter& JsonWriter::key(const std::string& k) {
  if (!first_stack_.back()) out_ += ',';
  first_stack_.back() = false;
  out_ += '"';
  out_ += k;
  out_ += "\":";
  pending_key_ = true;
  return *this;
}

JsonWriter& JsonWriter::value(double v) {
  comma();
  out_ += format_double(v);
  return *this;
}

JsonWriter& JsonWriter::value(long long v) {
  comma();
  out_ += std::to_string(v);
  return *this;
}

JsonWriter& JsonWriter::value(bool v) {
  comma();
  out_ += v ? "true" : "false";
  return *this;
}

JsonWriter& JsonWriter::value(const std::string& v) {
  comma();
  out_ += '"';
  for (char c : v) {
    switch (c) {
      case '"': out_ += "\\\""; break;
      case '\\': out_ += "\\\\"; break;
      case '\n': out_ += "\\n"; break;
      case '\t': out_ += "\\t"; break;
      default: out_ += c;
    }
  }
  out_ += '"';
  return *this;
}

JsonWriter& JsonWriter::value(const Eigen::VectorXd& v) {
  begin_array();
  for (long i = 0; i < v.size(); ++i) value(v[i]);
  end_array();
  return *this;
}

JsonWriter& JsonWriter::null() {
  comma();
  out_ += "null";
  return *this;
}

JsonWriter& JsonWriter::raw(const std::string& json) {
  comma();
  out_ += json;
  return *this;
}

static void report_body(JsonWriter& w, const CheckReport& r) {
  w.begin_object();
  w.key("name").value(r.name);
  w.key("anchor").value(r.anchor);
  w.key("K").value(r.K);
  w.key("N").value(r.N);
  w.key("t").value(r.t);
  w.key("worst_residual").value(r.worst_residual);
  w.key("location").value(r.worst_location);
  w.key("tolerance").value(r.tolerance);
  w.key("verdict").value(r.verdict ? std::string("pass") : std::string("fail"));
  if (!r.details.empty()) {
    w.key("details");
    w.begin_object();
    for (const auto& [k, v] : r.details) w.key(k).value(v);
    w.end_object();
  }
  w.end_object();
}

std::string reports_to_json(const std::vector<CheckReport>& reports) {
  JsonWriter w;
  w.begin_object();
  w.key("schema").value(static_cast<long long>(1));
  w.key("reports");
  w.begin_array();
  for (const auto& r : reports) report_body(w, r);
  w.end_array();
  w.end_object();
  return w.str();
}

static std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += "\"\"";
    else out += c;
  }
  out += '"';
  return out;
}

std::string reports_to_csv(const std::vector<CheckReport>& reports) {
  std::string out = "name,anchor,K,N,t,worst_residual,location,tolerance,verdict\n";
  for (const auto& r : reports) {
    out += csv_escape(r.name) + ',' + csv_escape(r.anchor) + ',';
    out += JsonWriter::format_double(r.K) + ',';
    out += JsonWriter::format_double(r.N) + ',';
    out += JsonWriter::format_double(r.t) + ',';
    out += JsonWriter::format_double(r.worst_residual) + ',';
    out += csv_escape(r.worst_location) + ',';
    out += JsonWriter::format_double(r.tolerance) + ',';
    out += r.verdict ? "pass" : "fail";
    out += '\n';
  }
  return out;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << text;
}

} // namespace curvelab
