#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <filesystem>
#include <limits>
#include <random>
#include <set>

#include "emofuse/dataio/bundle.hpp"
#include "emofuse/dataio/folds.hpp"
#include "emofuse/dataio/model_file.hpp"
#include "emofuse/dataio/synth.hpp"
#include "oracles.hpp"

using namespace emofuse;
namespace fs = std::filesystem;

namespace {

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() /
            ("emofuse-test-" + std::to_string(std::random_device{}()));
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

// Two tiny segments with awkward float values; the golden file holds
// exactly these.
std::vector<SegmentRecord> golden_records() {
  SegmentRecord a;
  a.id = "a";
  a.speaker_id = "s1";
  a.dialogue_id = "d1";
  a.label = Emotion::ANG;
  a.char_lengths = {3};
  a.h_p = Matrix<float>{{1.0f, -0.0f}, {std::numeric_limits<float>::denorm_min(), 3.5f}};
  a.h_s = Matrix<float>{{0.1f, -2.0f, std::numeric_limits<float>::max()}};
  SegmentRecord b;
  b.id = "b";
  b.speaker_id = "s2";
  b.dialogue_id = "d2";
  b.label = Emotion::POS;
  b.char_lengths = {1, 2};
  b.h_p = Matrix<float>{{0.25f, 0.5f}};
  b.h_s = Matrix<float>{{1, 2, 3}, {4, 5, 6}};
  return {a, b};
}

bool bit_equal(const Matrix<float>& x, const Matrix<float>& y) {
  return x.rows() == y.rows() && x.cols() == y.cols() &&
         std::memcmp(x.flat().data(), y.flat().data(), x.size() * sizeof(float)) == 0;
}

std::vector<SegmentRecord> random_records(std::mt19937_64& rng, std::size_t n) {
  std::vector<SegmentRecord> out;
  std::normal_distribution<float> normal(0.0f, 3.0f);
  const std::size_t dp = 1 + rng() % 5, ds = 1 + rng() % 5;
  for (std::size_t i = 0; i < n; ++i) {
    SegmentRecord r;
    r.id = "seg" + std::to_string(i);
    r.speaker_id = "spk" + std::to_string(rng() % 12);
    r.dialogue_id = "dlg" + std::to_string(rng() % 4);
    r.label = static_cast<Emotion>(rng() % 4);
    r.h_p = Matrix<float>(1 + rng() % 9, dp);
    r.h_s = Matrix<float>(1 + rng() % 5, ds);
    for (auto& v : r.h_p.flat()) v = normal(rng);
    for (auto& v : r.h_s.flat()) v = normal(rng);
    for (std::size_t j = 0; j < r.h_s.rows(); ++j) {
      r.char_lengths.push_back(1 + static_cast<std::uint32_t>(rng() % 9));
    }
    out.push_back(std::move(r));
  }
  return out;
}

FormatErrc decode_error(std::string bytes) {
  try {
    decode_bundle(std::move(bytes));
  } catch (const FormatError& e) {
    return e.code();
  }
  ADD_FAILURE() << "decode succeeded";
  return FormatErrc::io_error;
}

// Rewrites the manifest in place, keeping the payload region untouched.
std::string with_manifest(const std::string& bytes, const nlohmann::json& manifest) {
  std::size_t old_len = 0;
  for (int i = 0; i < 8; ++i) {
    old_len |= static_cast<std::size_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  }
  const std::string payload = bytes.substr(align8(kHeaderSize + old_len));
  std::string text = manifest.dump();
  std::string out = bytes.substr(0, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((text.size() >> (8 * i)) & 0xff));
  out += text;
  out.resize(align8(out.size()), '\0');
  return out + payload;
}

}  // namespace

TEST(Bundle, RoundTripIsBitExact) {
  std::mt19937_64 rng(1);
  TempDir dir;
  for (int trial = 0; trial < 20; ++trial) {
    const auto records = random_records(rng, 1 + rng() % 30);
    write_bundle(records, dir / "b.emob");
    const auto back = read_bundle(dir / "b.emob");
    ASSERT_EQ(back.size(), records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
      EXPECT_EQ(back[i], records[i]);
      EXPECT_TRUE(bit_equal(back[i].h_p, records[i].h_p));
      EXPECT_TRUE(bit_equal(back[i].h_s, records[i].h_s));
    }
  }
}

TEST(Bundle, SpecialFloatsSurviveBitExact) {
  const auto records = golden_records();
  const auto back = decode_bundle(encode_bundle(records));
  EXPECT_TRUE(std::signbit(back[0].h_p(0, 1)));
  EXPECT_EQ(back[0].h_p(1, 0), std::numeric_limits<float>::denorm_min());
  for (std::size_t i = 0; i < records.size(); ++i) {
    EXPECT_TRUE(bit_equal(back[i].h_p, records[i].h_p));
    EXPECT_TRUE(bit_equal(back[i].h_s, records[i].h_s));
  }
}

TEST(Bundle, EmptyListIsValid) {
  TempDir dir;
  write_bundle({}, dir / "empty.emob");
  EXPECT_TRUE(read_bundle(dir / "empty.emob").empty());
}

TEST(Bundle, RepeatedWritesAreByteIdentical) {
  std::mt19937_64 rng(2);
  TempDir dir;
  const auto records = random_records(rng, 25);
  write_bundle(records, dir / "x.emob");
  write_bundle(records, dir / "y.emob");
  EXPECT_EQ(read_file(dir / "x.emob"), read_file(dir / "y.emob"));
  EXPECT_FALSE(fs::exists(dir / "x.emob.tmp"));
}

TEST(Bundle, HeaderLayout) {
  const std::string bytes = encode_bundle(golden_records());
  EXPECT_EQ(bytes.substr(0, 4), "EMOB");
  EXPECT_EQ(bytes[4], 1);
  EXPECT_EQ(bytes[5], 0);
  EXPECT_EQ(bytes[6], 0);
  EXPECT_EQ(bytes[7], 0);
  std::uint64_t len = 0;
  for (int i = 0; i < 8; ++i) len |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[8 + i])) << (8 * i);
  const auto manifest = nlohmann::json::parse(bytes.substr(16, len));
  EXPECT_EQ(manifest["format"], "EMOB");
  EXPECT_EQ(manifest["dtype"], "float32-le");
  EXPECT_EQ(manifest["d_p"], 2);
  EXPECT_EQ(manifest["d_s"], 3);
  const std::size_t data = align8(16 + len);
  EXPECT_EQ(bytes.size() % 8, 0u);
  // first payload is H_p of "a": 1.0f little-endian
  EXPECT_EQ(manifest["segments"][0]["h_p"]["offset"], 0);
  float first;
  std::memcpy(&first, bytes.data() + data, 4);
  EXPECT_EQ(first, 1.0f);
  // 4 floats of H_p (16 bytes), then H_s at offset 16 (12 bytes padded to 16)
  EXPECT_EQ(manifest["segments"][0]["h_s"]["offset"], 16);
  EXPECT_EQ(manifest["segments"][1]["h_p"]["offset"], 32);
  EXPECT_EQ(manifest["segments"][1]["h_s"]["offset"], 40);
}

TEST(Bundle, GoldenFileMatchesEncoder) {
  const fs::path golden = fs::path(EMOFUSE_TEST_DATA) / "golden.emob";
  ASSERT_TRUE(fs::exists(golden)) << golden;
  EXPECT_EQ(read_file(golden), encode_bundle(golden_records()));
  EXPECT_EQ(read_bundle(golden), golden_records());
}

TEST(Bundle, CorruptedMagicIsBadMagic) {
  auto bytes = encode_bundle(golden_records());
  bytes[0] = 'X';
  EXPECT_EQ(decode_error(bytes), FormatErrc::bad_magic);
  EXPECT_EQ(decode_error(""), FormatErrc::bad_magic);
}

TEST(Bundle, TruncationIsTruncatedPayload) {
  const auto bytes = encode_bundle(golden_records());
  EXPECT_EQ(decode_error(bytes.substr(0, bytes.size() - 8)), FormatErrc::truncated_payload);
  EXPECT_EQ(decode_error(bytes.substr(0, 12)), FormatErrc::truncated_payload);
  EXPECT_EQ(decode_error(bytes.substr(0, 40)), FormatErrc::truncated_payload);
}

TEST(Bundle, DeclaredShapeLargerThanPayloadIsTruncated) {
  const auto bytes = encode_bundle(golden_records());
  auto m = ContainerReader(bytes, kBundleMagic).manifest();
  m["segments"][1]["n_frames"] = 1000;
  m["segments"][1]["h_p"]["bytes"] = 1000 * 2 * 4;
  EXPECT_EQ(decode_error(with_manifest(bytes, m)), FormatErrc::truncated_payload);
}

TEST(Bundle, ByteCountDisagreeingWithShapeIsShapeMismatch) {
  const auto bytes = encode_bundle(golden_records());
  auto m = ContainerReader(bytes, kBundleMagic).manifest();
  m["segments"][0]["n_frames"] = 3;
  EXPECT_EQ(decode_error(with_manifest(bytes, m)), FormatErrc::shape_mismatch);
  m = ContainerReader(bytes, kBundleMagic).manifest();
  m["segments"][1]["char_lengths"] = {1};
  EXPECT_EQ(decode_error(with_manifest(bytes, m)), FormatErrc::shape_mismatch);
}

TEST(Bundle, NonFinitePayloadIsRejected) {
  auto bytes = encode_bundle(golden_records());
  const auto m = ContainerReader(bytes, kBundleMagic).manifest();
  const std::size_t len = m.dump().size();
  const float nan = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(bytes.data() + align8(16 + len) + 4, &nan, 4);
  EXPECT_EQ(decode_error(bytes), FormatErrc::non_finite_payload);
}

TEST(Bundle, OtherNamedErrors) {
  auto bytes = encode_bundle(golden_records());
  auto v2 = bytes;
  v2[4] = 2;
  EXPECT_EQ(decode_error(v2), FormatErrc::unsupported_version);
  auto broken = bytes;
  broken[16] = '!';
  EXPECT_EQ(decode_error(broken), FormatErrc::malformed_manifest);
  auto m = ContainerReader(bytes, kBundleMagic).manifest();
  m["segments"][1]["id"] = "a";
  EXPECT_EQ(decode_error(with_manifest(bytes, m)), FormatErrc::duplicate_id);
  m = ContainerReader(bytes, kBundleMagic).manifest();
  m["segments"][0]["label"] = "SAD";
  EXPECT_EQ(decode_error(with_manifest(bytes, m)), FormatErrc::malformed_manifest);
}

TEST(Bundle, ErrorMessagesNameTheError) {
  try {
    decode_bundle("NOPE");
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(std::string(e.what()).rfind("bad magic", 0), 0u) << e.what();
  }
}

TEST(Bundle, WriterRejectsInvalidRecords) {
  auto records = golden_records();
  records[1].id = "a";
  EXPECT_THROW(encode_bundle(records), FormatError);
  records = golden_records();
  records[0].char_lengths = {};
  EXPECT_THROW(encode_bundle(records), ShapeError);
  records = golden_records();
  records[1].h_p = Matrix<float>(1, 5);
  EXPECT_THROW(encode_bundle(records), FormatError);
}

TEST(Folds, SpeakerDisjointOnRandomManifests) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    auto records = random_records(rng, 20 + rng() % 80);
    std::set<std::string> speakers;
    for (const auto& r : records) speakers.insert(r.speaker_id);
    if (speakers.size() < 5) continue;
    const auto plan = make_folds(records, 5, rng());
    std::map<std::string, std::string> speaker_of;
    for (const auto& r : records) speaker_of[r.id] = r.speaker_id;
    std::multiset<std::string> tested;
    for (const auto& f : plan.folds) {
      std::set<std::string> tr, va, te;
      for (const auto& id : f.train) tr.insert(speaker_of.at(id));
      for (const auto& id : f.validation) va.insert(speaker_of.at(id));
      for (const auto& id : f.test) te.insert(speaker_of.at(id));
      for (const auto& s : te) EXPECT_FALSE(tr.count(s) || va.count(s));
      for (const auto& s : va) EXPECT_FALSE(tr.count(s));
      EXPECT_EQ(f.train.size() + f.validation.size() + f.test.size(), records.size());
      tested.insert(f.test.begin(), f.test.end());
    }
    // every segment is tested exactly once
    EXPECT_EQ(tested.size(), records.size());
    for (const auto& r : records) EXPECT_EQ(tested.count(r.id), 1u);
  }
}

TEST(Folds, ValidationGroupIsTheNextTestGroup) {
  std::mt19937_64 rng(4);
  const auto records = random_records(rng, 200);
  const auto plan = make_folds(records, 5, 9);
  for (std::size_t i = 0; i < 5; ++i) {
    auto v = plan.folds[i].validation;
    auto t = plan.folds[(i + 1) % 5].test;
    std::sort(v.begin(), v.end());
    std::sort(t.begin(), t.end());
    EXPECT_EQ(v, t);
  }
}

TEST(Folds, SameSeedSamePlan) {
  std::mt19937_64 rng(5);
  const auto records = random_records(rng, 150);
  const auto a = make_folds(records, 5, 11);
  const auto b = make_folds(records, 5, 11);
  EXPECT_EQ(a.speaker_groups, b.speaker_groups);
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.folds[i].train, b.folds[i].train);
    EXPECT_EQ(a.folds[i].test, b.folds[i].test);
  }
  EXPECT_NE(a.speaker_groups, make_folds(records, 5, 12).speaker_groups);
}

TEST(Folds, Errors) {
  std::mt19937_64 rng(6);
  const auto records = random_records(rng, 50);
  EXPECT_THROW(make_folds(records, 2, 0), std::invalid_argument);
  EXPECT_THROW(make_folds(records, 40, 0), std::invalid_argument);
}

TEST(Synth, ClassCountsAndSpeakers) {
  auto spec = partial_information_preset(8, 30);
  const auto records = synth_generate(spec);
  std::array<std::size_t, 4> counts{};
  std::map<std::string, std::set<Emotion>> labels_of;
  for (const auto& r : records) {
    ++counts[static_cast<std::size_t>(r.label)];
    labels_of[r.speaker_id].insert(r.label);
    r.validate();
    EXPECT_GE(r.n_frames(), spec.frames_min);
    EXPECT_LE(r.n_frames(), spec.frames_max);
    EXPECT_GE(r.n_subwords(), spec.subwords_min);
    EXPECT_LE(r.n_subwords(), spec.subwords_max);
  }
  EXPECT_EQ(counts, (std::array<std::size_t, 4>{30, 30, 30, 30}));
  EXPECT_EQ(labels_of.size(), 4u * 6);
  for (const auto& [spk, labels] : labels_of) EXPECT_EQ(labels.size(), 1u);
}

TEST(Synth, SameSeedSameBytes) {
  const auto spec = partial_information_preset(8, 20);
  EXPECT_EQ(encode_bundle(synth_generate(spec)), encode_bundle(synth_generate(spec)));
  auto other = spec;
  other.seed = 8;
  EXPECT_NE(encode_bundle(synth_generate(spec)), encode_bundle(synth_generate(other)));
}

TEST(Synth, SpecJsonRoundTrip) {
  const auto spec = corpus_scale_preset(12);
  nlohmann::json j = spec;
  const auto back = j.get<SynthSpec>();
  EXPECT_EQ(encode_bundle(synth_generate(back)), encode_bundle(synth_generate(spec)));
}

TEST(Synth, InvalidSpecIsRejected) {
  auto spec = partial_information_preset(8, 10);
  spec.frames_min = 0;
  EXPECT_THROW(synth_generate(spec), std::invalid_argument);
  EXPECT_THROW(partial_information_preset(4), std::invalid_argument);
}

namespace {

// Nearest class mean on the row-averaged matrices, ties to the lower class.
std::size_t nearest_mean(const std::vector<double>& x,
                         const std::array<std::vector<double>, 4>& mu) {
  std::size_t best = 0;
  double best_d = INFINITY;
  for (std::size_t c = 0; c < 4; ++c) {
    double d = 0;
    for (std::size_t i = 0; i < x.size(); ++i) d += (x[i] - mu[c][i]) * (x[i] - mu[c][i]);
    if (d < best_d - 1e-12) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

std::vector<double> row_mean(const Matrix<float>& m) {
  std::vector<double> out(m.cols(), 0.0);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < m.cols(); ++c) out[c] += m(r, c) / static_cast<double>(m.rows());
  }
  return out;
}

struct ModalityUa {
  double para, sem, both;
};

ModalityUa nearest_mean_ua(const SynthSpec& spec) {
  const auto records = synth_generate(spec);
  std::vector<Prediction> p, s, b;
  std::array<std::vector<double>, 4> joint;
  for (std::size_t c = 0; c < 4; ++c) {
    joint[c] = spec.mu_p[c];
    joint[c].insert(joint[c].end(), spec.mu_s[c].begin(), spec.mu_s[c].end());
  }
  for (const auto& r : records) {
    const auto xp = row_mean(r.h_p), xs = row_mean(r.h_s);
    auto xb = xp;
    xb.insert(xb.end(), xs.begin(), xs.end());
    const auto truth = static_cast<std::size_t>(r.label);
    p.push_back({r.id, truth, nearest_mean(xp, spec.mu_p)});
    s.push_back({r.id, truth, nearest_mean(xs, spec.mu_s)});
    b.push_back({r.id, truth, nearest_mean(xb, joint)});
  }
  return {metrics_from_predictions(p).ua, metrics_from_predictions(s).ua,
          metrics_from_predictions(b).ua};
}

}  // namespace

TEST(Synth, PartialInformationBayesAnalysis) {
  // noiseless limit: each modality recovers exactly two classes
  EXPECT_DOUBLE_EQ(oracle::bayes_unimodal_ua(2.0, 0.0, 3), 0.75);
  EXPECT_DOUBLE_EQ(oracle::bayes_bimodal_ua_lower(2.0, 0.0, 3), 1.0);
  // default spread: pooled noise 0.5/sqrt(3) keeps the distinct pairs apart
  EXPECT_GT(oracle::bayes_unimodal_ua(2.0, 0.5, 3), 0.749);
  EXPECT_GT(oracle::bayes_bimodal_ua_lower(2.0, 0.5, 3), 0.998);
}

TEST(Synth, PresetMeansSeparateOnePairPerModality) {
  const auto spec = partial_information_preset(8);
  auto dist = [](const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(d);
  };
  EXPECT_NEAR(dist(spec.mu_p[0], spec.mu_p[1]), 2.0, 1e-12);
  EXPECT_EQ(spec.mu_p[2], spec.mu_p[3]);
  EXPECT_NEAR(dist(spec.mu_s[2], spec.mu_s[3]), 2.0, 1e-12);
  EXPECT_EQ(spec.mu_s[0], spec.mu_s[1]);
}

TEST(Synth, NearestMeanRecoversAllClassesWhenNoiseVanishes) {
  const auto ua = nearest_mean_ua(partial_information_preset(8, 50, 0.01));
  EXPECT_DOUBLE_EQ(ua.both, 1.0);
  EXPECT_DOUBLE_EQ(ua.para, 0.75);
  EXPECT_DOUBLE_EQ(ua.sem, 0.75);
}

TEST(Synth, NearestMeanTracksBayesBoundsAtDefaultNoise) {
  const auto spec = partial_information_preset(32, 200);
  const auto ua = nearest_mean_ua(spec);
  const double uni = oracle::bayes_unimodal_ua(2.0, spec.sigma, spec.subwords_min);
  EXPECT_NEAR(ua.para, uni, 0.01);
  EXPECT_NEAR(ua.sem, uni, 0.01);
  EXPECT_LE(ua.para, 0.75);
  EXPECT_GE(ua.both, oracle::bayes_bimodal_ua_lower(2.0, spec.sigma, spec.subwords_min) - 0.01);
}

TEST(ModelFile, RoundTripPreservesParameters) {
  TempDir dir;
  for (auto arch : kAllArchitectures) {
    ModelConfig cfg;
    cfg.architecture = arch;
    cfg.d_model = 16;
    cfg.n_heads = 4;
    cfg.alignment = AlignmentMethod::Characters;
    auto m = init_params<float>(cfg, 3);
    for (auto& h : m.heads) h.b = {0.5f, -1.0f, 0.0f, 2.0f};
    save_model(m, dir / "m.bin");
    auto back = load_model(dir / "m.bin");
    EXPECT_EQ(back.config.architecture, arch);
    EXPECT_EQ(back.config.alignment, AlignmentMethod::Characters);
    EXPECT_EQ(back.config.d_model, 16u);
    EXPECT_EQ(back.config.n_heads, 4u);
    auto pa = m.params(), pb = back.params();
    ASSERT_EQ(pa.size(), pb.size());
    for (std::size_t i = 0; i < pa.size(); ++i) {
      EXPECT_TRUE(std::equal(pa[i].begin(), pa[i].end(), pb[i].begin()));
    }
  }
}

TEST(ModelFile, BundleIsNotAModel) {
  TempDir dir;
  write_bundle(golden_records(), dir / "b.emob");
  EXPECT_THROW(load_model(dir / "b.emob"), FormatError);
  EXPECT_THROW(load_model(dir / "missing.bin"), FormatError);
}
