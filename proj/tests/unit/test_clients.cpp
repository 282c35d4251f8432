#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <thread>

#include "json.hpp"

#include "cell/error.hpp"
#include "cell/http_clients.hpp"
#include "cell/mock_clients.hpp"
#include "cell/response_cache.hpp"

using namespace cell;
using nlohmann::json;

namespace {

std::filesystem::path temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("cell_test_" + name);
  std::filesystem::remove(p);
  return p;
}

EndpointConfig fast_config(const std::string& url = "mock://x") {
  EndpointConfig c;
  c.url = url;
  c.model = "m";
  c.backoff_ms = 0;
  return c;
}

}  // namespace

TEST(MockGenerator, RulesAndDefault) {
  MockGenerator gen({{{"kill"}, {}, "R1"}, {{"a", "b"}, {"c"}, "both {prompt}"}}, "default");
  EXPECT_EQ(gen.generate(normalize_prompt("could kill time")), "R1");
  EXPECT_EQ(gen.generate(normalize_prompt("a b")), "both a b");
  EXPECT_EQ(gen.generate(normalize_prompt("a b c")), "default");
  EXPECT_EQ(gen.generate(normalize_prompt("nothing")), "default");
  EXPECT_EQ(gen.calls(), 4);
  EXPECT_EQ(gen.received().front(), "could kill time");
}

TEST(MockGenerator, DeterministicNonce) {
  MockGenerator a({}, "n={nonce}", 1), b({}, "n={nonce}", 1), c({}, "n={nonce}", 2);
  const auto p = normalize_prompt("same prompt");
  EXPECT_EQ(a.generate(p), a.generate(p));
  EXPECT_EQ(a.generate(p), b.generate(p));
  EXPECT_NE(a.generate(p), c.generate(p));
}

TEST(MockInfiller, TableDeletionAndDeterminism) {
  const auto x = normalize_prompt("I said could kill him");
  const auto split = split_tokens(x, 2);
  const auto root = Candidate::root(x, split.size());
  MockInfiller inf({{"could kill", {"could go back"}}, {"him", {"x", "y"}}}, 9);
  EXPECT_EQ(inf.infill(mask(split, root, 2)), "I said could go back him");
  EXPECT_EQ(inf.infill(mask(split, root, 1)), "could kill him");
  const auto pick = inf.infill(mask(split, root, 3));
  for (int i = 0; i < 5; ++i) EXPECT_EQ(inf.infill(mask(split, root, 3)), pick);
  MockInfiller same({{"him", {"x", "y"}}}, 9);
  EXPECT_EQ(same.infill(mask(split, root, 3)), pick);
}

TEST(NliProbabilities, Validation) {
  EXPECT_NO_THROW(validate({0.2, 0.3, 0.5}));
  EXPECT_NO_THROW(validate({0.2, 0.3, 0.5 + 5e-7}));
  EXPECT_THROW(validate({0.2, 0.3, 0.6}), Error);
  EXPECT_THROW(validate({-0.1, 0.6, 0.5}), Error);
}

TEST(MockPreference, Complement) {
  MockPreferenceScorer pref({{"good", 3.0}, {"ok", 1.5}});
  for (auto [a, b] : std::vector<std::pair<std::string, std::string>>{
           {"good", "bad"}, {"ok", "good"}, {"x", "y"}}) {
    EXPECT_NEAR(pref.prefer("c", a, b) + pref.prefer("c", b, a), 1.0, 1e-12);
  }
  EXPECT_DOUBLE_EQ(pref.prefer("c", "good", "bad"), 0.75);
}

TEST(Sha256, KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex("").size(), 64u);
}

TEST(ResponseCache, PersistsAcrossInstances) {
  const auto path = temp_path("cache.jsonl");
  {
    ResponseCache cache(path);
    EXPECT_FALSE(cache.lookup("ns", "fp1"));
    cache.store("ns", "fp1", "hello\nworld");
    cache.store("other", "fp1", "different namespace");
    EXPECT_EQ(cache.lookup("ns", "fp1").value(), "hello\nworld");
    EXPECT_EQ(cache.hits(), 1);
    EXPECT_EQ(cache.misses(), 1);
  }
  {
    std::ofstream(path, std::ios::app) << "not json\n";
  }
  ResponseCache reloaded(path);
  EXPECT_EQ(reloaded.size(), 2u);
  EXPECT_EQ(reloaded.lookup("ns", "fp1").value(), "hello\nworld");
  EXPECT_EQ(reloaded.lookup("other", "fp1").value(), "different namespace");
  std::filesystem::remove(path);
}

TEST(CachingTransport, ServesRepeatsFromCache) {
  auto inner = std::make_shared<MockTransport>(
      [](const HttpRequest& r) { return HttpResponse{200, "echo:" + r.body}; });
  auto cache = std::make_shared<ResponseCache>();
  CachingTransport t(inner, cache, "ns");
  const HttpRequest req{"mock://a", "{\"x\":1}", {{"Authorization", "Bearer a"}}};
  EXPECT_EQ(t.post(req).body, "echo:{\"x\":1}");
  HttpRequest other_auth = req;
  other_auth.headers = {{"Authorization", "Bearer b"}};
  EXPECT_EQ(t.post(other_auth).body, "echo:{\"x\":1}");
  EXPECT_EQ(inner->calls(), 1);
  t.post({"mock://b", req.body, {}});
  EXPECT_EQ(inner->calls(), 2);
  EXPECT_NE(CachingTransport::fingerprint(req), CachingTransport::fingerprint({"mock://b", req.body, {}}));
  EXPECT_EQ(CachingTransport::fingerprint(req).size(), 64u);
}

TEST(CachingTransport, ErrorsAreNotCached) {
  int n = 0;
  auto inner = std::make_shared<MockTransport>([&](const HttpRequest&) {
    return ++n == 1 ? HttpResponse{500, "boom"} : HttpResponse{200, "ok"};
  });
  CachingTransport t(inner, std::make_shared<ResponseCache>(), "ns");
  EXPECT_EQ(t.post({"u", "b", {}}).status, 500);
  EXPECT_EQ(t.post({"u", "b", {}}).body, "ok");
  EXPECT_EQ(t.post({"u", "b", {}}).body, "ok");
  EXPECT_EQ(inner->calls(), 2);
}

TEST(CachingTransport, InFlightRequestsShareOneCall) {
  auto inner = std::make_shared<MockTransport>([](const HttpRequest&) {
    std::this_thread::sleep_for(std::chrono::milliseconds(100));
    return HttpResponse{200, "slow"};
  });
  CachingTransport t(inner, std::make_shared<ResponseCache>(), "ns");
  std::vector<std::string> got(6);
  {
    std::vector<std::jthread> threads;
    for (std::size_t i = 0; i < got.size(); ++i) {
      threads.emplace_back([&, i] { got[i] = t.post({"u", "same", {}}).body; });
    }
  }
  EXPECT_EQ(inner->calls(), 1);
  for (const auto& g : got) EXPECT_EQ(g, "slow");
}

TEST(HttpEndpoint, MissingTokenNamesVariable) {
  ::unsetenv("CELL_TEST_UNSET_TOKEN");
  auto cfg = fast_config();
  cfg.auth_env = "CELL_TEST_UNSET_TOKEN";
  try {
    HttpEndpoint e(cfg, std::make_shared<MockTransport>([](const HttpRequest&) { return HttpResponse{200, "{}"}; }));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAuth);
    EXPECT_NE(std::string(e.what()).find("CELL_TEST_UNSET_TOKEN"), std::string::npos);
  }
}

TEST(HttpEndpoint, SendsBearerToken) {
  ::setenv("CELL_TEST_TOKEN", "s3cret", 1);
  auto cfg = fast_config();
  cfg.auth_env = "CELL_TEST_TOKEN";
  std::string seen;
  HttpEndpoint e(cfg, std::make_shared<MockTransport>([&](const HttpRequest& r) {
    for (const auto& [k, v] : r.headers) {
      if (k == "Authorization") seen = v;
    }
    return HttpResponse{200, "{}"};
  }));
  e.call(json::object());
  EXPECT_EQ(seen, "Bearer s3cret");
}

TEST(HttpEndpoint, RetriesThenSurfacesNetworkError) {
  auto t = std::make_shared<MockTransport>([](const HttpRequest&) { return HttpResponse{500, "x"}; });
  HttpEndpoint e(fast_config(), t);
  try {
    e.call(json::object());
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.kind(), ErrorKind::kNetwork);
  }
  EXPECT_EQ(t->calls(), 4);
}

TEST(HttpEndpoint, RecoversFromTransientFailures) {
  int n = 0;
  auto t = std::make_shared<MockTransport>([&](const HttpRequest&) -> HttpResponse {
    ++n;
    if (n == 1) throw Error(ErrorKind::kNetwork, "connection reset");
    if (n == 2) return {429, "slow down"};
    return {200, R"({"ok":true})"};
  });
  HttpEndpoint e(fast_config(), t);
  EXPECT_TRUE(e.call(json::object()).at("ok").get<bool>());
  EXPECT_EQ(t->calls(), 3);
}

TEST(HttpEndpoint, AuthAndMalformed) {
  HttpEndpoint denied(fast_config(), std::make_shared<MockTransport>([](const HttpRequest&) {
                        return HttpResponse{401, "no"};
                      }));
  try {
    denied.call(json::object());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kAuth);
  }
  HttpEndpoint garbled(fast_config(), std::make_shared<MockTransport>([](const HttpRequest&) {
                         return HttpResponse{200, "<html>"};
                       }));
  try {
    garbled.call(json::object());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kMalformedResponse);
  }
}

TEST(HttpGenerator, ChatRequestDefaults) {
  json seen;
  auto t = std::make_shared<MockTransport>([&](const HttpRequest& r) {
    seen = json::parse(r.body);
    return HttpResponse{200, R"({"choices":[{"message":{"role":"assistant","content":"hi"}}]})"};
  });
  HttpGenerator gen(fast_config(), t);
  EXPECT_EQ(gen.generate(normalize_prompt("hello there")), "hi");
  EXPECT_EQ(seen.at("temperature"), 0);
  EXPECT_EQ(seen.at("max_tokens"), 256);
  EXPECT_EQ(seen.at("messages").back().at("content"), "hello there");
  EXPECT_EQ(gen.identity(), "m@mock://x");
}

TEST(HttpClients, RoundTripThroughMockServers) {
  auto gen = std::make_shared<MockGenerator>(std::vector<GeneratorRule>{{{"kill"}, {}, "R1"}}, "R0");
  HttpGenerator hgen(fast_config(), std::make_shared<MockTransport>(serve_generator(gen)));
  EXPECT_EQ(hgen.generate(normalize_prompt("could kill")), "R1");

  auto inf = std::make_shared<MockInfiller>(std::map<std::string, std::vector<std::string>>{{"cat", {"dog"}}});
  HttpInfiller hinf(fast_config(), std::make_shared<MockTransport>(serve_infiller(inf)));
  const auto x = normalize_prompt("the cat sat");
  EXPECT_EQ(hinf.infill(mask(split_tokens(x, 1), Candidate::root(x, 3), 2)), "the dog sat");

  auto nli = std::make_shared<MockNliScorer>(std::vector<NliRule>{{"No", "Yes", {0.1, 0.1, 0.8}}});
  HttpNliScorer hnli(fast_config(), std::make_shared<MockTransport>(serve_nli(nli)));
  EXPECT_DOUBLE_EQ(hnli.classify("No.", "Yes.").contradiction, 0.8);

  auto pref = std::make_shared<MockPreferenceScorer>(std::vector<std::pair<std::string, double>>{{"a", 3.0}});
  HttpPreferenceScorer hpref(fast_config(), std::make_shared<MockTransport>(serve_preference(pref)));
  EXPECT_DOUBLE_EQ(hpref.prefer("ctx", "a", "b"), 0.75);

  auto judge = std::make_shared<MockJudgeScorer>(std::vector<JudgeRule>{{"rude", {0.2, 0.4}}});
  HttpJudgeScorer hjudge(fast_config(), std::make_shared<MockTransport>(serve_judge(judge)));
  EXPECT_DOUBLE_EQ(hjudge.judge("user: hi\nassistant: rude", "rubric", 1), 0.4);

  auto emb = std::make_shared<MockEmbedder>(8);
  HttpEmbedder hemb(fast_config(), std::make_shared<MockTransport>(serve_embedder(emb)));
  EXPECT_EQ(hemb.embed("some words").size(), 8u);
}

TEST(HttpJudge, ScaleAndParse) {
  auto cfg = fast_config();
  cfg.score_scale = 10.0;
  auto t = std::make_shared<MockTransport>([](const HttpRequest&) {
    return HttpResponse{200, R"({"choices":[{"message":{"content":"Score: 7 out of 10"}}]})"};
  });
  HttpJudgeScorer judge(cfg, t);
  EXPECT_DOUBLE_EQ(judge.judge("c", "r", 0), 0.7);
  EXPECT_DOUBLE_EQ(parse_first_number("about -0.5 or so"), -0.5);
  EXPECT_THROW(parse_first_number("none"), Error);
}

TEST(HttpNli, RejectsInvalidProbabilities) {
  auto t = std::make_shared<MockTransport>([](const HttpRequest&) {
    return HttpResponse{200, R"({"entailment":0.5,"neutral":0.5,"contradiction":0.5})"};
  });
  HttpNliScorer nli(fast_config(), t);
  EXPECT_THROW(nli.classify("a", "b"), Error);
}

TEST(PrefixedGenerator, PrependsDirective) {
  MockGenerator gen({}, "ok");
  PrefixedGenerator pre(gen, "Be brief.");
  pre.generate(normalize_prompt("user: hi"));
  EXPECT_EQ(gen.received().back(), "Be brief. user: hi");
}
