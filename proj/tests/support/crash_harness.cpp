#include "support/crash_harness.hpp"

#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "adx/store/local_store.hpp"
#include "support/fixtures.hpp"

namespace adx::testing {

namespace {

void write_line(int fd, const std::string& line) {
  std::string s = line + "\n";
  const char* p = s.data();
  std::size_t left = s.size();
  while (left > 0) {
    const ssize_t n = ::write(fd, p, left);
    if (n <= 0) _exit(3);
    p += n;
    left -= static_cast<std::size_t>(n);
  }
}

[[noreturn]] void child_main(const std::filesystem::path& dir, std::uint64_t seed, int fd) {
  try {
    store::LocalStore::Options opts;
    opts.compact_threshold_bytes = 12 * 1024;  // so kills also land inside compaction
    store::LocalStore s(dir, opts);
    const auto kb = clinic_kb();
    auto p = make_patient(40);
    s.upsert_patient(p);
    for (std::uint64_t i = 0;; ++i) {
      auto e = make_encounter(*kb, p.patient_id, 6, seed * 100000 + i);
      s.append_encounter(e);
      write_line(fd, "C " + nlohmann::json(e).dump());
      if (i % 3 == 0) {
        const Uuid id = e.encounter_id;
        s.mark_acked(std::span<const Uuid>(&id, 1));
        write_line(fd, "A " + id.to_string());
      }
    }
  } catch (...) {
    _exit(2);
  }
}

}  // namespace

CrashTrialResult run_store_crash_trial(const std::filesystem::path& dir, std::uint64_t seed) {
  CrashTrialResult r;
  int fds[2];
  if (::pipe(fds) != 0) {
    r.error = "pipe failed";
    return r;
  }
  const pid_t pid = ::fork();
  if (pid < 0) {
    r.error = "fork failed";
    return r;
  }
  if (pid == 0) {
    ::close(fds[0]);
    child_main(dir, seed, fds[1]);
  }
  ::close(fds[1]);

  std::mt19937_64 rng(seed);
  std::this_thread::sleep_for(std::chrono::microseconds(2000 + rng() % 60000));
  ::kill(pid, SIGKILL);
  int status = 0;
  ::waitpid(pid, &status, 0);

  std::string data;
  char buf[65536];
  for (;;) {
    const ssize_t n = ::read(fds[0], buf, sizeof buf);
    if (n <= 0) break;
    data.append(buf, static_cast<std::size_t>(n));
  }
  ::close(fds[0]);

  std::map<Uuid, EncounterRecord> committed;
  std::set<Uuid> acked;
  std::istringstream lines(data);
  std::string line;
  while (std::getline(lines, line)) {
    // A line cut short by the kill was never fully reported; ignore it.
    if (lines.eof()) break;
    if (line.rfind("C ", 0) == 0) {
      EncounterRecord e = nlohmann::json::parse(line.substr(2));
      committed[e.encounter_id] = e;
    } else if (line.rfind("A ", 0) == 0) {
      acked.insert(*Uuid::parse(line.substr(2)));
    }
  }
  r.committed = committed.size();
  r.acked = acked.size();

  try {
    store::LocalStore s(dir);
    r.reopened = true;
    const auto state = s.sync_state();
    const std::set<Uuid> outbox(state.outbox.begin(), state.outbox.end());
    for (const auto& e : s.list_encounters()) {
      (void)e;
      ++r.recovered;
    }
    for (const auto& [id, e] : committed) {
      const auto got = s.get_encounter(id);
      if (!got) {
        ++r.lost;
        continue;
      }
      if (!(*got == e)) ++r.mismatched;
      const bool was_acked = acked.contains(id);
      // Acked records must have left the outbox; unacked ones may only be
      // out of it if the ack committed just before the kill went unreported.
      if (was_acked && outbox.contains(id)) ++r.ack_violations;
      if (!was_acked && !outbox.contains(id) && !state.acked.contains(id)) ++r.ack_violations;
    }
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

}  // namespace adx::testing
