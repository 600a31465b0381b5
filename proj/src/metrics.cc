// Copyright 2026 The FedSL-Sim Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "fedsl/metrics.h"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <tuple>

#include "fedsl/error.h"

namespace fedsl {

namespace {

void put_double(std::string& out, double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InternalError("float formatting failed");
  out.append(buf, end);
}

void put_uint(std::string& out, std::uint64_t v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  if (ec != std::errc()) throw InternalError("integer formatting failed");
  out.append(buf, end);
}

template <typename T>
T parse_field(std::string_view field, std::size_t line) {
  T v{};
  auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
  if (ec != std::errc() || end != field.data() + field.size()) {
    throw ValidationError("csv line " + std::to_string(line) + ": bad field '" +
                          std::string(field) + "'");
  }
  return v;
}

}  // namespace

void sort_rows(MetricsTable& table) {
  std::stable_sort(table.begin(), table.end(), [](const MetricsRow& a, const MetricsRow& b) {
    return std::tie(a.framework, a.seed, a.axis_value, a.round) <
           std::tie(b.framework, b.seed, b.axis_value, b.round);
  });
}

std::string format_csv(MetricsTable table) {
  sort_rows(table);
  std::string out(kCsvHeader);
  out += '\n';
  for (const auto& r : table) {
    out += r.framework;
    out += ',';
    put_uint(out, r.seed);
    out += ',';
    if (r.axis_value) put_double(out, *r.axis_value);
    out += ',';
    put_uint(out, r.round);
    out += ',';
    put_double(out, r.sim_time_s);
    out += ',';
    put_double(out, r.train_loss);
    out += ',';
    put_double(out, r.test_acc);
    out += ',';
    put_uint(out, r.bits_tx);
    out += ',';
    put_double(out, r.energy_j);
    out += ',';
    put_double(out, r.max_staleness);
    out += '\n';
  }
  return out;
}

void write_csv(const MetricsTable& table, const std::string& path) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  const std::string text = format_csv(table);
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw Error("write to '" + path + "' failed");
}

MetricsTable parse_csv(std::string_view text) {
  MetricsTable table;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    std::string_view line = text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (line_no == 1) {
      if (line != kCsvHeader) throw ValidationError("csv: unexpected header");
      continue;
    }
    if (line.empty()) continue;
    std::vector<std::string_view> f;
    std::size_t start = 0;
    for (;;) {
      const auto comma = line.find(',', start);
      f.push_back(line.substr(start, comma - start));
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (f.size() != 10) {
      throw ValidationError("csv line " + std::to_string(line_no) + ": expected 10 fields");
    }
    MetricsRow r;
    r.framework = std::string(f[0]);
    r.seed = parse_field<std::uint64_t>(f[1], line_no);
    if (!f[2].empty()) r.axis_value = parse_field<double>(f[2], line_no);
    r.round = parse_field<std::uint64_t>(f[3], line_no);
    r.sim_time_s = parse_field<double>(f[4], line_no);
    r.train_loss = parse_field<double>(f[5], line_no);
    r.test_acc = parse_field<double>(f[6], line_no);
    r.bits_tx = parse_field<std::uint64_t>(f[7], line_no);
    r.energy_j = parse_field<double>(f[8], line_no);
    r.max_staleness = parse_field<double>(f[9], line_no);
    table.push_back(std::move(r));
  }
  if (line_no == 0) throw ValidationError("csv: missing header");
  return table;
}

MetricsTable read_csv(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_csv(ss.str());
}

}  // namespace fedsl
