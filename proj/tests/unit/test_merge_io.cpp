#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include <unistd.h>

#include "mixinfer/error.hpp"
#include "mixinfer/merge_io.hpp"
#include "support/oracles.hpp"

using namespace mixinfer;

namespace {

MergeList parse(const std::string& payload, MergeFormat format, bool char_level = false) {
  return parse_merge_list({format, payload}, {char_level});
}

std::vector<MergeRule> rules(std::initializer_list<std::pair<const char*, const char*>> items) {
  std::vector<MergeRule> out;
  for (const auto& [l, r] : items) out.push_back({l, r});
  return out;
}

std::string rank_vocab(const std::vector<std::string>& tokens) {
  std::string out;
  for (std::size_t i = 0; i < 256; ++i) out += base64_encode(std::string(1, static_cast<char>(i))) + " " + std::to_string(i) + "\n";
  std::size_t rank = 256;
  for (const auto& t : tokens) out += base64_encode(t) + " " + std::to_string(rank++) + "\n";
  return out;
}

}  // namespace

TEST(MergeIo, HfMergesTranscription) {
  const auto ml = parse("#version: 0.2\nl o\nlo w\n", MergeFormat::hf_merges);
  EXPECT_EQ(ml.rules(), rules({{"l", "o"}, {"lo", "w"}}));
}

TEST(MergeIo, HfSpaceMapping) {
  const auto ml = parse("\xc4\xa0 t\n", MergeFormat::hf_merges);
  EXPECT_EQ(ml.rules(), rules({{" ", "t"}}));
  EXPECT_EQ(bytes_to_hf(" \n"), "\xc4\xa0\xc4\x8a");
  EXPECT_EQ(hf_to_bytes("\xc4\xa0\xc4\x8a"), " \n");
  for (int b = 0; b < 256; ++b) {
    const std::string s(1, static_cast<char>(b));
    EXPECT_EQ(hf_to_bytes(bytes_to_hf(s)), s);
  }
}

TEST(MergeIo, RankVocabReconstructs) {
  const auto ml = parse(rank_vocab({"ab", "abc"}), MergeFormat::rank_vocab);
  EXPECT_EQ(ml.rules(), rules({{"a", "b"}, {"ab", "c"}}));
}

TEST(MergeIo, EmptyPayloadIsParseError) {
  EXPECT_THROW(parse("", MergeFormat::plain), ParseError);
  EXPECT_THROW(detect_format(""), ParseError);
}

TEST(MergeIo, MalformedLineReportsLine) {
  try {
    parse("a b\nonlyone\n", MergeFormat::plain);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
  EXPECT_THROW(parse("YQ== x\n", MergeFormat::rank_vocab), ParseError);
}

TEST(MergeIo, DetectFormat) {
  EXPECT_EQ(detect_format("#version: 0.2\na b\n"), MergeFormat::hf_merges);
  EXPECT_EQ(detect_format(rank_vocab({"ab"})), MergeFormat::rank_vocab);
  EXPECT_EQ(detect_format("a \\x0a\n"), MergeFormat::plain);
}

TEST(MergeIo, EscapeRoundTrip) {
  std::string all;
  for (int b = 0; b < 256; ++b) all.push_back(static_cast<char>(b));
  EXPECT_EQ(unescape_exact(escape_exact(all)), all);
  EXPECT_THROW(unescape_exact("\\xZZ"), InvalidArgument);
  EXPECT_EQ(base64_decode(base64_encode(all)), all);
  EXPECT_THROW(base64_decode("!!"), InvalidArgument);
}

TEST(MergeIo, DisplayToken) {
  EXPECT_EQ(display_token(" t"), "_t");
  EXPECT_EQ(display_token("\n"), "\\n");
}

// parse(serialize(x)) == x for every format.
TEST(MergeIoProperty, RoundTripAllFormats) {
  std::mt19937_64 rng(12);
  for (int round = 0; round < 10; ++round) {
    std::string text = oracle::toy_text(rng, 3000, 6, 100);
    text += " \xce\xb1\xce\xb2 \xce\xb1\xce\xb2 \t\t x\ty \xff\xfe \xff\xfe";
    const auto ml = train(pretokenize(text, PretokenRules::commercial()), 80);
    for (auto f : {MergeFormat::hf_merges, MergeFormat::rank_vocab, MergeFormat::plain})
      EXPECT_EQ(parse(serialize_merge_list(ml, f), f).rules(), ml.rules()) << to_string(f);
    const auto chars = MergeList::with_alphabet(oracle::letters(6), ml.rules());
    const auto back = parse(serialize_merge_list(chars, MergeFormat::plain), MergeFormat::plain);
    EXPECT_FALSE(back.is_byte_level());
    EXPECT_EQ(back.base_alphabet(), chars.base_alphabet());
    EXPECT_EQ(back.rules(), chars.rules());
  }
}

TEST(MergeIo, FileRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / ("mixinfer_io_" + std::to_string(::getpid()) + ".txt");
  const auto ml = MergeList::byte_level(rules({{"l", "o"}, {"lo", "w"}, {"e", "r"}}));
  write_merge_list(path, ml, MergeFormat::plain);
  EXPECT_EQ(parse_merge_list(read_tokenizer_file(path, MergeFormat::plain)), ml);
  std::filesystem::remove(path);
  EXPECT_THROW(read_tokenizer_file(path), DataError);
}

TEST(Reconstruct, Examples) {
  EXPECT_EQ(reconstruct_from_vocab({"_", "t", "h", "e", "th", "the"}, false).rules(),
            rules({{"t", "h"}, {"th", "e"}}));
  EXPECT_EQ(reconstruct_from_vocab({"a", "b", "ab"}, false).rules(), rules({{"a", "b"}}));
  try {
    reconstruct_from_vocab({"a", "b", "c", "abc"}, false);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("abc"), std::string::npos);
  }
}

TEST(Dedupe, DropsUnreachableProducer) {
  const auto ml = MergeList::byte_level(rules({{"_", "t"}, {"h", "e"}, {"_t", "he"}, {"_th", "e"}}));
  const auto r = dedupe_redundant(ml);
  EXPECT_EQ(r.removed, (std::vector<std::size_t>{3}));
  EXPECT_EQ(r.merges.rules(), rules({{"_", "t"}, {"h", "e"}, {"_t", "he"}}));
}

TEST(Dedupe, KeepsTheRuleThatFires) {
  // (_,the) comes first but `the` is created after (_t,he) can fire.
  const auto ml = MergeList::byte_level(
      rules({{"_", "t"}, {"h", "e"}, {"_t", "he"}, {"t", "he"}, {"_", "the"}, {"_t", "h"}, {"_th", "e"}}));
  const auto r = dedupe_redundant(ml);
  EXPECT_EQ(r.removed, (std::vector<std::size_t>{4, 6}));
}

TEST(Dedupe, NoDuplicatesUnchanged) {
  const auto ml = MergeList::byte_level(rules({{"a", "b"}, {"c", "d"}}));
  const auto r = dedupe_redundant(ml);
  EXPECT_TRUE(r.removed.empty());
  EXPECT_EQ(r.merges, ml);
}

TEST(Strip, WhitespacePrefix) {
  const auto ml = MergeList::byte_level(rules({{"\n", "\n"}, {"\n\n", "\n\n"}, {"a", "b"}}));
  const auto r = strip_manual_prefix(ml);
  EXPECT_EQ(r.stripped, 2u);
  EXPECT_EQ(r.merges.rules(), rules({{"a", "b"}}));
  const auto kept = MergeList::byte_level(rules({{"a", "b"}, {"\n", "\n"}}));
  EXPECT_EQ(strip_manual_prefix(kept).stripped, 0u);
  EXPECT_EQ(strip_manual_prefix(kept).merges, kept);
}

TEST(Truncate, Lengths) {
  const auto ml = MergeList::byte_level(rules({{"a", "b"}, {"c", "d"}, {"e", "f"}, {"g", "h"}, {"i", "j"}}));
  EXPECT_EQ(truncate(ml, 3).size(), 3u);
  EXPECT_TRUE(truncate(ml, 0).empty());
  EXPECT_EQ(shared_prefix_length(ml, truncate(ml, 3)), 3u);
}
