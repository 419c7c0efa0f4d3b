// Acceptance runner: one PASS/FAIL/SKIP line per criterion.
//
//   acceptance                 every criterion
//   acceptance --group desk    dataset-free criteria plus the desk runtime budget
//   acceptance <name>...       the named criteria; exit 77 if all were skipped

#include <chrono>
#include <cstdio>
#include <exception>
#include <iostream>
#include <string>
#include <vector>

#include "criteria.hpp"

using namespace acceptance;

namespace {

constexpr double kDeskBudgetSeconds = 60.0;

const char* label(Status s) {
  switch (s) {
    case Status::Pass: return "PASS";
    case Status::Fail: return "FAIL";
    case Status::Skip: return "SKIP";
  }
  return "?";
}

void print(const std::string& name, const Outcome& o) {
  std::cout << label(o.status) << ' ' << name << ": " << o.detail << std::endl;
}

Outcome run_one(const Criterion& c) {
  try {
    return c.check();
  } catch (const std::exception& e) {
    return fail(std::string("exception: ") + e.what());
  }
}

int usage(const std::vector<Criterion>& all) {
  std::cerr << "usage: acceptance [--group desk|dataset] [criterion...]\ncriteria:\n";
  for (const auto& c : all) std::cerr << "  " << c.name << " (" << c.group << ")\n";
  return 2;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<Criterion> all = desk_criteria();
  for (auto& c : dataset_criteria()) all.push_back(std::move(c));

  std::string group;
  std::vector<std::string> names;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--group" && i + 1 < argc) {
      group = argv[++i];
    } else if (arg == "--help" || arg == "-h" || arg.rfind("--", 0) == 0) {
      return usage(all);
    } else {
      names.push_back(arg);
    }
  }

  std::vector<const Criterion*> selected;
  for (const auto& c : all)
    if ((group.empty() || c.group == group) && names.empty()) selected.push_back(&c);
  for (const auto& n : names) {
    const Criterion* found = nullptr;
    for (const auto& c : all)
      if (c.name == n) found = &c;
    if (!found) {
      std::cerr << "unknown criterion '" << n << "'\n";
      return usage(all);
    }
    selected.push_back(found);
  }
  if (selected.empty()) return usage(all);

  int passed = 0, failed = 0, skipped = 0;
  double desk_seconds = 0.0;
  bool ran_desk = false;
  for (const Criterion* c : selected) {
    const auto start = std::chrono::steady_clock::now();
    const Outcome o = run_one(*c);
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (c->group == "desk") {
      desk_seconds += seconds;
      ran_desk = true;
    }
    print(c->name, o);
    (o.status == Status::Pass ? passed : o.status == Status::Fail ? failed : skipped)++;
  }

  if (ran_desk && names.empty()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f s (budget %.0f s)", desk_seconds, kDeskBudgetSeconds);
    const Outcome o = verdict(desk_seconds < kDeskBudgetSeconds, buf);
    print("desk_runtime", o);
    (o.status == Status::Pass ? passed : failed)++;
  }

  std::cout << passed << " passed, " << failed << " failed, " << skipped << " skipped" << std::endl;
  if (failed > 0) return 1;
  if (passed == 0 && skipped > 0) return 77;
  return 0;
}
