#include <charconv>
#include <cstdio>
#include <sstream>

#include "../binary_io.hpp"
#include "poolforge/error.hpp"
#include "poolforge/eval/gap.hpp"

namespace poolforge::eval {

std::string format_predictions(const PredictionSet& preds) {
  std::string out;
  char buf[64];
  for (const auto& v : preds.videos) {
    out += v.id;
    for (const auto& p : v.top) {
      std::snprintf(buf, sizeof buf, " %u:%.17g", p.label, p.confidence);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

void write_predictions(const std::string& path, const PredictionSet& preds) {
  preds.validate();
  detail::write_file(path, format_predictions(preds));
}

PredictionSet parse_predictions(const std::string& text, std::size_t label_count) {
  PredictionSet set;
  set.label_count = label_count;
  std::istringstream lines(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    std::istringstream fields(line);
    VideoPredictions v;
    if (!(fields >> v.id)) continue;
    std::string tok;
    while (fields >> tok) {
      const auto colon = tok.find(':');
      LabelScore s;
      const char* end = tok.data() + tok.size();
      bool ok = colon != std::string::npos;
      if (ok) {
        auto r1 = std::from_chars(tok.data(), tok.data() + colon, s.label);
        auto r2 = std::from_chars(tok.data() + colon + 1, end, s.confidence);
        ok = r1.ec == std::errc{} && r1.ptr == tok.data() + colon && r2.ec == std::errc{} && r2.ptr == end;
      }
      if (!ok) throw DataError("predictions line " + std::to_string(lineno) + ": bad pair '" + tok + "'");
      v.top.push_back(s);
    }
    set.videos.push_back(std::move(v));
  }
  try {
    set.validate();
  } catch (const ContractError& e) {
    throw DataError(e.what());
  }
  return set;
}

PredictionSet read_predictions(const std::string& path, std::size_t label_count) {
  return parse_predictions(detail::read_file(path), label_count);
}

}  // namespace poolforge::eval
