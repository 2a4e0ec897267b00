#pragma once

#include <string>
#include <vector>

#include "curvelab/types.hpp"

namespace curvelab {

/// Minimal JSON emitter with a fixed 17-significant-digit float format, so
/// identical runs produce byte-identical reports on any toolchain.
class JsonWriter {
public:
  JsonWriter& begin_object();
  JsonWriter& end_object();
  JsonWriter& begin_array();
  JsonWriter& end_array();
  JsonWriter& key(const std::string& k);
  JsonWriter& value(double v);
  JsonWriter& value(long long v);
  JsonWriter& value(bool v);
  JsonWriter& value(const std::string& v);
  JsonWriter& value(const Eigen::VectorXd& v);
  JsonWriter& null();
  JsonWriter& raw(const std::string& json); ///< splice a pre-serialized value
  const std::string& str() const { return out_; }

  static std::string format_double(double v);

private:
  void comma();
  std::string out_;
  std::vector<bool> first_stack_;
  bool pending_key_ = false;
};

/// One report (or a batch) as versioned JSON: {"schema": 1, "reports": [...]}.
std::string reports_to_json(const std::vector<CheckReport>& reports);

/// CSV with the documented column order:
/// name,anchor,K,N,t,worst_residual,location,tolerance,verdict
std::string reports_to_csv(const std::vector<CheckReport>& reports);

void write_text_file(const std::string& path, const std::string& text);

} // namespace curvelab
