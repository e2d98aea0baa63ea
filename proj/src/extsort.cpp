// Copyright 2026 The GUR Authors
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

#include "gur/extsort.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <queue>

#include "gur/common.hpp"

namespace gur {

namespace {

namespace fs = std::filesystem;

struct KeyedLine {
  std::uint64_t key;
  std::string line;

  bool operator<(const KeyedLine& o) const {
    if (key != o.key) return key < o.key;
    return line < o.line;
  }
};

void write_run(std::vector<KeyedLine>& buf, const fs::path& path) {
  std::sort(buf.begin(), buf.end());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw UsageError("extsort: cannot create run file " + path.string());
  for (const KeyedLine& kl : buf) {
    out << kl.line << '\n';
  }
  if (!out) throw UsageError("extsort: write failed on " + path.string());
  buf.clear();
}

// Streaming cursor over one sorted run.
struct RunCursor {
  std::ifstream in;
  KeyedLine cur;
  bool alive = false;

  bool advance(const std::function<std::uint64_t(const std::string&)>& key) {
    std::string line;
    if (std::getline(in, line)) {
      cur.key = key(line);
      cur.line = std::move(line);
      alive = true;
    } else {
      alive = false;
    }
    return alive;
  }
};

// Merges the given sorted runs into out; drops adjacent duplicates when
// asked. Returns the record count written.
std::uint64_t merge_runs(
    const std::vector<fs::path>& runs, const fs::path& out_path,
    const std::function<std::uint64_t(const std::string&)>& key,
    bool drop_duplicates) {
  std::vector<RunCursor> cursors(runs.size());
  // Heap of (key, line, cursor index); smallest first.
  using Entry = std::pair<KeyedLine, std::size_t>;
  auto cmp = [](const Entry& a, const Entry& b) {
    if (!(a.first < b.first) && !(b.first < a.first)) {
      return a.second > b.second;
    }
    return b.first < a.first;
  };
  std::priority_queue<Entry, std::vector<Entry>, decltype(cmp)> heap(cmp);
  for (std::size_t i = 0; i < runs.size(); ++i) {
    cursors[i].in.open(runs[i], std::ios::binary);
    if (!cursors[i].in) {
      throw UsageError("extsort: cannot reopen run " + runs[i].string());
    }
    if (cursors[i].advance(key)) heap.push({cursors[i].cur, i});
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw UsageError("extsort: cannot create " + out_path.string());
  std::uint64_t written = 0;
  std::string last;
  bool have_last = false;
  while (!heap.empty()) {
    Entry e = heap.top();
    heap.pop();
    if (!drop_duplicates || !have_last || e.first.line != last) {
      out << e.first.line << '\n';
      ++written;
      if (drop_duplicates) {
        last = e.first.line;
        have_last = true;
      }
    }
    std::size_t i = e.second;
    if (cursors[i].advance(key)) heap.push({cursors[i].cur, i});
  }
  if (!out) throw UsageError("extsort: write failed on " + out_path.string());
  return written;
}

}  // namespace

std::uint64_t external_sort(
    const std::vector<std::string>& input_paths, const std::string& out_path,
    const std::function<std::uint64_t(const std::string&)>& key,
    const ExtSortOptions& opts) {
  if (opts.memory_budget < (1ull << 20)) {
    throw UsageError("extsort: memory budget below 1 MiB");
  }
  if (opts.merge_fan_in < 2) {
    throw UsageError("extsort: merge fan-in must be at least 2");
  }

  fs::path out(out_path);
  fs::path tmp_dir = out.parent_path().empty() ? fs::path(".")
                                               : out.parent_path();
  std::string stem = out.filename().string();
  auto run_name = [&](std::uint64_t n) {
    return tmp_dir / (stem + ".run." + std::to_string(n));
  };

  // Run formation: accumulate until the byte budget, sort, spill.
  std::vector<fs::path> runs;
  std::uint64_t next_run = 0;
  std::vector<KeyedLine> buf;
  std::uint64_t buf_bytes = 0;
  // Each buffered line also costs its KeyedLine header and string capacity;
  // 64 bytes is a conservative per-record overhead estimate.
  constexpr std::uint64_t kOverhead = 64;
  for (const std::string& p : input_paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw UsageError("extsort: cannot read shard " + p);
    std::string line;
    while (std::getline(in, line)) {
      buf_bytes += line.size() + kOverhead;
      buf.push_back({key(line), std::move(line)});
      if (buf_bytes >= opts.memory_budget) {
        write_run(buf, run_name(next_run++));
        runs.push_back(run_name(next_run - 1));
        buf_bytes = 0;
      }
    }
    if (in.bad()) throw UsageError("extsort: read failed on shard " + p);
  }
  if (!buf.empty() || runs.empty()) {
    write_run(buf, run_name(next_run++));
    runs.push_back(run_name(next_run - 1));
  }

  // Multi-level merge down to one output. Duplicate dropping is applied at
  // every level; dropping early is safe because equal records sort together.
  while (runs.size() > static_cast<std::size_t>(opts.merge_fan_in)) {
    std::vector<fs::path> next_level;
    for (std::size_t i = 0; i < runs.size();
         i += static_cast<std::size_t>(opts.merge_fan_in)) {
      std::size_t hi = std::min(
          runs.size(), i + static_cast<std::size_t>(opts.merge_fan_in));
      std::vector<fs::path> group(runs.begin() + i, runs.begin() + hi);
      fs::path merged = run_name(next_run++);
      merge_runs(group, merged, key, opts.drop_duplicates);
      for (const fs::path& g : group) fs::remove(g);
      next_level.push_back(merged);
    }
    runs = std::move(next_level);
  }

  std::uint64_t written = merge_runs(runs, out, key, opts.drop_duplicates);
  for (const fs::path& r : runs) fs::remove(r);
  return written;
}

std::uint64_t dedup_and_shuffle(const std::vector<std::string>& shard_paths,
                                const std::string& out_path,
                                std::uint64_t seed,
                                std::uint64_t memory_budget) {
  ExtSortOptions opts;
  opts.memory_budget = memory_budget;
  opts.drop_duplicates = true;
  std::string deduped = out_path + ".dedup";
  external_sort(
      shard_paths, deduped,
      [](const std::string& line) { return fnv1a64(line); }, opts);

  ExtSortOptions shuffle_opts;
  shuffle_opts.memory_budget = memory_budget;
  shuffle_opts.drop_duplicates = false;
  std::uint64_t n = external_sort(
      {deduped}, out_path,
      [seed](const std::string& line) { return hash_mix(seed, fnv1a64(line)); },
      shuffle_opts);
  std::filesystem::remove(deduped);
  return n;
}

}  // namespace gur
