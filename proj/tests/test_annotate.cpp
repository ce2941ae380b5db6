#include "progresskit/annotate.hpp"

#include <doctest.h>

#include <boost/multiprecision/cpp_int.hpp>
#include <random>

#include "progresskit/errors.hpp"
#include "progresskit/markers.hpp"
#include "progresskit/tokenize.hpp"
#include "progresskit/trace.hpp"
#include "test_util.hpp"

using namespace progresskit;

namespace {

// Independent splitter: collect paragraph contents by scanning for newline
// runs, ignoring where the delimiters end up.
std::vector<std::string> split_paragraphs_oracle(const std::string& text) {
  std::vector<std::string> paragraphs;
  std::string current;
  std::size_t i = 0;
  while (i < text.size()) {
    if (text[i] == '\n') {
      std::size_t run = 0;
      while (i + run < text.size() && text[i + run] == '\n') ++run;
      if (run >= 2) {
        if (count_tokens(current) > 0) paragraphs.push_back(current);
        current.clear();
      } else {
        current.push_back('\n');
      }
      i += run;
    } else {
      current.push_back(text[i]);
      ++i;
    }
  }
  if (count_tokens(current) > 0) paragraphs.push_back(current);
  return paragraphs;
}

}  // namespace

TEST_CASE("segment_paragraphs splits at blank lines") {
  const Segmentation seg = segment_paragraphs("p1\n\np2\n\np3");
  REQUIRE(seg.segments.size() == 3);
  CHECK(seg.segments[0] == "p1\n\n");
  CHECK(seg.segments[1] == "p2\n\n");
  CHECK(seg.segments[2] == "p3");
}

TEST_CASE("segment_paragraphs keeps single paragraphs whole") {
  const Segmentation seg = segment_paragraphs("single paragraph");
  REQUIRE(seg.segments.size() == 1);
  CHECK(seg.segments[0] == "single paragraph");
}

TEST_CASE("segment_paragraphs rejects empty or token-free text") {
  CHECK_THROWS_AS(segment_paragraphs(""), DataError);
  CHECK_THROWS_AS(segment_paragraphs(" \n\n \n "), DataError);
}

TEST_CASE("segment_paragraphs covers the text and matches the paragraph oracle") {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> n_paragraphs(1, 12);
  std::uniform_int_distribution<int> tokens(1, 15);
  for (int i = 0; i < 300; ++i) {
    std::string text;
    const int k = n_paragraphs(rng);
    for (int p = 0; p < k; ++p) {
      if (p > 0) text += "\n\n";
      text += testing::random_text(rng, tokens(rng));
    }
    const Segmentation seg = segment_paragraphs(text);

    std::string concat;
    for (const auto& segment : seg.segments) {
      concat += segment;
      CHECK(count_tokens(segment) >= 1);
    }
    CHECK(concat == text);

    const auto oracle = split_paragraphs_oracle(text);
    REQUIRE(seg.segments.size() == oracle.size());
    for (std::size_t s = 0; s < oracle.size(); ++s) {
      CHECK(count_tokens(seg.segments[s]) == count_tokens(oracle[s]));
    }
  }
}

TEST_CASE("insert_annotations computes cumulative floor values") {
  Segmentation seg;
  seg.segments = {"a b c", " d e f", " g h i j"};  // token lengths 3, 3, 4
  const AnnotatedText annotated = insert_annotations(seg);
  REQUIRE(annotated.annotations.size() == 3);
  CHECK(annotated.annotations[0].value == 30);
  CHECK(annotated.annotations[1].value == 60);
  CHECK(annotated.annotations[2].value == 100);
  CHECK(annotated.annotations[0].position == 3);
  CHECK(annotated.annotations[1].position == 6);
  CHECK(annotated.annotations[2].position == 10);
}

TEST_CASE("insert_annotations single segment") {
  Segmentation seg;
  seg.segments = {"only one"};
  const AnnotatedText annotated = insert_annotations(seg);
  REQUIRE(annotated.annotations.size() == 1);
  CHECK(annotated.annotations[0].value == 100);
}

TEST_CASE("insert_annotations matches a rational floor oracle and is nondecreasing") {
  using boost::multiprecision::cpp_rational;
  std::mt19937_64 rng(555);
  std::uniform_int_distribution<int> n_segments(1, 50);
  std::uniform_int_distribution<int> tokens(1, 20);
  for (int i = 0; i < 300; ++i) {
    Segmentation seg;
    const int n = n_segments(rng);
    std::vector<std::int64_t> lengths;
    for (int s = 0; s < n; ++s) {
      const int len = tokens(rng);
      lengths.push_back(len);
      std::string segment = s == 0 ? "" : " ";
      segment += testing::random_text(rng, len);
      seg.segments.push_back(segment);
    }
    const AnnotatedText annotated = insert_annotations(seg);

    std::int64_t total = 0;
    for (std::int64_t len : lengths) total += len;
    std::int64_t cumulative = 0;
    int previous = 0;
    for (int s = 0; s < n; ++s) {
      cumulative += lengths[s];
      const cpp_rational exact = cpp_rational(100 * cumulative) / total;
      const int floor_value =
          static_cast<int>(boost::multiprecision::numerator(exact) /
                           boost::multiprecision::denominator(exact));
      CHECK(annotated.annotations[s].value == floor_value);
      CHECK(annotated.annotations[s].value >= previous);
      CHECK(annotated.annotations[s].value >= 0);
      CHECK(annotated.annotations[s].value <= 100);
      previous = annotated.annotations[s].value;
    }
    CHECK(annotated.annotations.back().value == 100);
  }
}

TEST_CASE("insert then extract recovers values and the concatenated text") {
  std::mt19937_64 rng(777);
  std::uniform_int_distribution<int> n_segments(1, 20);
  std::uniform_int_distribution<int> tokens(1, 12);
  for (int i = 0; i < 1000; ++i) {
    Segmentation seg;
    std::string concat;
    const int n = n_segments(rng);
    for (int s = 0; s < n; ++s) {
      std::string segment = s == 0 ? "" : "\n";
      segment += testing::random_text(rng, tokens(rng));
      concat += segment;
      seg.segments.push_back(segment);
    }
    const AnnotatedText annotated = insert_annotations(seg);
    const ExtractionResult extracted = extract_annotations(annotated.text);

    CHECK(extracted.clean_text == concat);
    REQUIRE(extracted.annotations.size() == annotated.annotations.size());
    for (std::size_t s = 0; s < annotated.annotations.size(); ++s) {
      CHECK(extracted.annotations[s].value == annotated.annotations[s].value);
      CHECK(extracted.annotations[s].position == annotated.annotations[s].position);
    }
  }
}

TEST_CASE("cosine_rho endpoints and midpoint") {
  const MaskingSchedule sched{11, 0.5};
  CHECK(cosine_rho(0, sched) == doctest::Approx(0.0));
  CHECK(cosine_rho(10, sched) == doctest::Approx(0.5));
  CHECK(cosine_rho(5, sched) == doctest::Approx(0.25));
}

TEST_CASE("cosine_rho is nondecreasing and bounded") {
  const MaskingSchedule sched{37, 0.5};
  double previous = -1.0;
  for (int step = 0; step < sched.total_steps; ++step) {
    const double rho = cosine_rho(step, sched);
    CHECK(rho >= previous);
    CHECK(rho >= 0.0);
    CHECK(rho <= sched.rho_max + 1e-15);
    previous = rho;
  }
}

TEST_CASE("cosine_rho degenerate and invalid schedules") {
  CHECK(cosine_rho(0, {1, 0.5}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(cosine_rho(-1, {10, 0.5}), std::out_of_range);
  CHECK_THROWS_AS(cosine_rho(10, {10, 0.5}), std::out_of_range);
  CHECK_THROWS_AS(cosine_rho(0, {0, 0.5}), std::invalid_argument);
}

namespace {

std::string annotated_fixture(int n_markers, std::mt19937_64& rng) {
  Segmentation seg;
  for (int s = 0; s < n_markers; ++s) {
    std::string segment = s == 0 ? "" : " ";
    segment += progresskit::testing::random_word(rng);
    seg.segments.push_back(segment);
  }
  return insert_annotations(seg).text;
}

}  // namespace

TEST_CASE("mask_annotations rho endpoints") {
  std::mt19937_64 rng(31);
  const std::string annotated = annotated_fixture(20, rng);

  CHECK(mask_annotations(annotated, 0.0, 123) == annotated);
  CHECK(find_marker_spans(mask_annotations(annotated, 1.0, 123)).empty());

  const std::string kept_last = mask_annotations(annotated, 1.0, 123, /*keep_last=*/true);
  const auto survivors = find_marker_spans(kept_last);
  REQUIRE(survivors.size() == 1);
  CHECK(survivors[0].value == 100);
}

TEST_CASE("mask_annotations is seed-deterministic and seed-sensitive") {
  std::mt19937_64 rng(32);
  const std::string annotated = annotated_fixture(100, rng);
  const std::string a = mask_annotations(annotated, 0.5, 42);
  const std::string b = mask_annotations(annotated, 0.5, 42);
  CHECK(a == b);
  const std::string c = mask_annotations(annotated, 0.5, 43);
  CHECK(a != c);
}

TEST_CASE("mask_annotations keeps surviving spans byte-identical") {
  const std::string annotated =
      "a <progressbar> 10 </progressbar> b <progressbar>100</progressbar>";
  // With rho 0 nothing moves; with keep_last the final odd-spaced span stays.
  const std::string masked = mask_annotations(annotated, 1.0, 5, /*keep_last=*/true);
  CHECK(masked.find("<progressbar>100</progressbar>") != std::string::npos);
  CHECK(masked.find("<progressbar> 10 </progressbar>") == std::string::npos);
}

TEST_CASE("mask_annotations empirical removal rate near rho") {
  std::mt19937_64 rng(33);
  const std::string annotated = annotated_fixture(2000, rng);
  const std::string masked = mask_annotations(annotated, 0.5, 9001);
  const double removed =
      static_cast<double>(2000 - find_marker_spans(masked).size()) / 2000.0;
  CHECK(removed > 0.45);
  CHECK(removed < 0.55);
}

TEST_CASE("mask_annotations propagates malformed-annotation errors") {
  CHECK_THROWS_AS(mask_annotations("a <progressbar>9", 0.5, 1), ParseError);
  CHECK_THROWS_AS(mask_annotations("a", 1.5, 1), std::invalid_argument);
}

TEST_CASE("tokenize_annotated cuts marker spans into three tokens") {
  const auto tokens = tokenize_annotated("w1 w2<progressbar> 30 </progressbar>w3");
  REQUIRE(tokens.size() == 6);
  CHECK(tokens[0] == AnnotatedToken{"w1", false});
  CHECK(tokens[1] == AnnotatedToken{"w2", false});
  CHECK(tokens[2] == AnnotatedToken{"<progressbar>", true});
  CHECK(tokens[3] == AnnotatedToken{"30", true});
  CHECK(tokens[4] == AnnotatedToken{"</progressbar>", true});
  CHECK(tokens[5] == AnnotatedToken{"w3", false});
}

TEST_CASE("loss_weights puts gamma on marker tokens") {
  const auto tokens =
      tokenize_annotated("w1 w2 w3 <progressbar>40</progressbar> w4 w5 w6 w7");
  REQUIRE(tokens.size() == 10);
  const auto weights = loss_weights(tokens, 5.0);
  const std::vector<double> expected = {1, 1, 1, 5, 5, 5, 1, 1, 1, 1};
  CHECK(weights == expected);
}

TEST_CASE("loss_weights gamma 1 is the identity weighting") {
  const auto tokens = tokenize_annotated("a <progressbar>5</progressbar> b");
  for (double w : loss_weights(tokens, 1.0)) CHECK(w == 1.0);
  CHECK_THROWS_AS(loss_weights(tokens, 0.5), std::invalid_argument);
}

TEST_CASE("loss_weights total matches the counting identity") {
  std::mt19937_64 rng(34);
  std::uniform_int_distribution<int> n_markers(1, 30);
  std::uniform_real_distribution<double> gamma_dist(1.0, 9.0);
  for (int i = 0; i < 200; ++i) {
    const std::string annotated = annotated_fixture(n_markers(rng), rng);
    const auto tokens = tokenize_annotated(annotated);
    const double gamma = gamma_dist(rng);

    std::size_t marker_tokens = 0;
    for (const auto& token : tokens) {
      if (token.in_marker) ++marker_tokens;
    }
    double total = 0.0;
    for (double w : loss_weights(tokens, gamma)) total += w;
    const double expected =
        static_cast<double>(tokens.size()) + (gamma - 1.0) * static_cast<double>(marker_tokens);
    CHECK(total == doctest::Approx(expected).epsilon(1e-12));
  }
}
