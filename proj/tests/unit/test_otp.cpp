#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "adx/smslink/otp.hpp"
#include "support/fixtures.hpp"

using namespace adx::smslink;
using adx::testing::TempDir;

namespace {

std::shared_ptr<PadFile> pad_of(std::vector<std::uint8_t> bytes, PadRole role = PadRole::terminal) {
  return std::make_shared<PadFile>("p", std::make_shared<const std::vector<std::uint8_t>>(std::move(bytes)),
                                   role, std::make_shared<MemoryCursorStore>());
}

std::vector<std::uint8_t> read_all(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

}  // namespace

TEST(Otp, ZeroPadIsIdentity) {
  auto pad = pad_of(std::vector<std::uint8_t>(64, 0));
  const std::vector<std::uint8_t> msg{'h', 'e', 'l', 'l', 'o'};
  EXPECT_EQ(otp_encrypt(*pad, msg).bytes, msg);
}

TEST(Otp, PadEqualToPlaintextGivesZeros) {
  const std::vector<std::uint8_t> msg{9, 8, 7, 6, 5, 4, 3, 2, 1};
  std::vector<std::uint8_t> bytes = msg;
  bytes.resize(msg.size() * 2, 0xee);
  auto pad = pad_of(bytes);
  EXPECT_EQ(otp_encrypt(*pad, msg).bytes, std::vector<std::uint8_t>(msg.size(), 0));
}

TEST(Otp, RoundTripAcrossRoles) {
  std::mt19937_64 rng(1);
  std::vector<std::uint8_t> bytes(4096);
  for (auto& b : bytes) b = static_cast<std::uint8_t>(rng());
  auto term = pad_of(bytes, PadRole::terminal);
  auto serv = pad_of(bytes, PadRole::server);
  for (int i = 0; i < 50; ++i) {
    std::vector<std::uint8_t> msg(rng() % 60 + 1);
    for (auto& b : msg) b = static_cast<std::uint8_t>(rng());
    PadFile& sender = i % 2 ? *term : *serv;
    const PadFile& receiver = i % 2 ? *serv : *term;
    const auto ct = otp_encrypt(sender, msg);
    EXPECT_EQ(otp_decrypt(receiver, ct.bytes, ct.offset), msg);
  }
}

TEST(Otp, RolesUseDisjointHalves) {
  auto term = pad_of(std::vector<std::uint8_t>(100), PadRole::terminal);
  auto serv = pad_of(std::vector<std::uint8_t>(100), PadRole::server);
  EXPECT_EQ(term->reserve(10), 0u);
  EXPECT_EQ(serv->reserve(10), 50u);
  EXPECT_EQ(term->remaining(), 40u);
}

TEST(Otp, ExhaustionConsumesNothing) {
  auto pad = pad_of(std::vector<std::uint8_t>(20));
  pad->reserve(6);
  EXPECT_THROW(pad->reserve(5), PadExhaustedError);
  EXPECT_EQ(pad->remaining(), 4u);
  EXPECT_NO_THROW(pad->reserve(4));
}

TEST(Otp, ObserverSeesEveryReservation) {
  auto pad = pad_of(std::vector<std::uint8_t>(200));
  std::vector<std::pair<std::uint64_t, std::size_t>> seen;
  pad->set_observer([&](const std::string&, std::uint64_t off, std::size_t len) { seen.emplace_back(off, len); });
  pad->reserve(3);
  pad->reserve(7);
  EXPECT_EQ(seen, (std::vector<std::pair<std::uint64_t, std::size_t>>{{0, 3}, {3, 7}}));
}

TEST(Otp, CursorPersistsAcrossReopen) {
  TempDir dir;
  generate_pad_pair(dir.path(), "k1", 1000);
  {
    auto pad = PadFile::open(dir / "terminal", "k1", PadRole::terminal);
    pad->reserve(123);
  }
  auto pad = PadFile::open(dir / "terminal", "k1", PadRole::terminal);
  EXPECT_EQ(pad->cursor(), 123u);
  EXPECT_EQ(pad->reserve(1), 123u);
}

TEST(PadGen, WritesIdenticalCopiesAndMeta) {
  TempDir dir;
  generate_pad_pair(dir.path(), "k1", 4096);
  const auto a = read_all(dir / "terminal" / "k1.pad");
  const auto b = read_all(dir / "server" / "k1.pad");
  EXPECT_EQ(a.size(), 4096u);
  EXPECT_EQ(a, b);
  EXPECT_TRUE(std::filesystem::exists(dir / "k1.meta.json"));
  const auto book = PadBook::open_dir(dir / "server", PadRole::server);
  EXPECT_EQ(book.remaining(), 2048u);
}

TEST(PadGen, BytesLookUniform) {
  TempDir dir;
  const std::size_t n = 1 << 18;
  generate_pad_pair(dir.path(), "k1", n);
  const auto bytes = read_all(dir / "terminal" / "k1.pad");
  std::array<double, 256> counts{};
  for (auto b : bytes) counts[b] += 1;
  const double expected = static_cast<double>(n) / 256;
  double chi2 = 0;
  for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
  // 255 degrees of freedom; 340 is beyond the 0.9997 quantile.
  EXPECT_LT(chi2, 340.0);
}
