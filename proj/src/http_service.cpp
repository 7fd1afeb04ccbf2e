#include "finforge/http_service.hpp"

#include "finforge/serialize.hpp"
#include "httplib.h"

namespace finforge {

using Json = nlohmann::json;

namespace {

void reply(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), "application/json");
}

void reply_error(httplib::Response& res, ErrorCode code, const std::string& message, const std::string& detail) {
  reply(res, http_status(code), {{"code", std::string(to_string(code))}, {"message", message}, {"detail", detail}});
}

Json body_of(const httplib::Request& req) {
  const auto j = Json::parse(req.body, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw Error(ErrorCode::malformed, "request body must be a JSON object");
  return j;
}

std::string require_string(const Json& j, const char* key) {
  if (!j.contains(key) || !j[key].is_string()) {
    throw Error(ErrorCode::invalid_argument, std::string("field '") + key + "' is required and must be a string");
  }
  return j[key].get<std::string>();
}

using Handler = std::function<Json(const httplib::Request&)>;

httplib::Server::Handler wrap(Handler h, int ok_status = 200) {
  return [h = std::move(h), ok_status](const httplib::Request& req, httplib::Response& res) {
    try {
      reply(res, ok_status, h(req));
    } catch (const Error& e) {
      reply_error(res, e.code(), e.what(), e.detail());
    } catch (const Json::exception& e) {
      reply_error(res, ErrorCode::malformed, "request has a field of the wrong type", e.what());
    } catch (const std::exception& e) {
      reply_error(res, ErrorCode::internal, "internal error", e.what());
    }
  };
}

}  // namespace

HttpService::HttpService(Engine& engine) : engine_(engine), server_(std::make_unique<httplib::Server>()) {
  routes();
}

HttpService::~HttpService() = default;

void HttpService::routes() {
  auto& s = *server_;
  Engine& eng = engine_;

  s.Post("/v1/tasks:generate", wrap([&eng](const httplib::Request& req) {
    const Json b = body_of(req);
    const Json params = b.contains("params") ? b["params"] : Json::object();
    Json out = Json::array();
    for (const auto& t : eng.generate(require_string(b, "mode"), params)) out.push_back(json::encode(t));
    return Json{{"tasks", out}};
  }, 201));

  s.Get(R"(/v1/tasks/([^/]+))", wrap([&eng](const httplib::Request& req) {
    return json::encode(eng.task(TaskId(req.matches[1].str())));
  }));

  s.Get("/v1/tasks", wrap([&eng](const httplib::Request& req) {
    std::optional<VerificationLevel> level;
    if (req.has_param("level")) level = parse_enum<VerificationLevel>(req.get_param_value("level"));
    Json out = Json::array();
    for (const auto& t : eng.tasks(level)) out.push_back(json::encode(t));
    return Json{{"tasks", out}};
  }));

  s.Post("/v1/verify", wrap([&eng](const httplib::Request& req) {
    const Json b = body_of(req);
    std::vector<CandidateResponse> responses;
    if (b.contains("responses")) {
      if (!b["responses"].is_array()) throw Error(ErrorCode::invalid_argument, "responses must be an array");
      for (const auto& r : b["responses"]) responses.push_back(json::decode_response(r));
    }
    return eng.verify(TaskId(require_string(b, "task_id")),
                      parse_enum<VerificationLevel>(require_string(b, "level")), responses);
  }));

  s.Post("/v1/score", wrap([&eng](const httplib::Request& req) {
    const Json b = body_of(req);
    if (b.contains("trajectory")) {
      const Trajectory traj = json::decode_trajectory(b["trajectory"]);
      if (b.contains("scenario_id") && require_string(b, "scenario_id") != traj.scenario.str()) {
        throw Error(ErrorCode::invalid_argument, "scenario_id does not match the trajectory");
      }
      return json::encode(eng.score_trajectory(traj));
    }
    return json::encode(eng.score(TaskId(require_string(b, "task_id")), require_string(b, "response")));
  }));

  s.Get("/v1/adjudication", wrap([&eng](const httplib::Request& req) {
    std::optional<AdjudicationStatus> status;
    if (req.has_param("status")) status = parse_enum<AdjudicationStatus>(req.get_param_value("status"));
    Json out = Json::array();
    for (const auto& it : eng.adjudication(status)) {
      Json j = json::encode(it);
      // The console shows the prompt alongside the candidates.
      const auto task = eng.task(it.task_id);
      j["task"] = {{"prompt", task.prompt}, {"context_docs", task.context_docs}, {"level", enum_name(task.level)}};
      out.push_back(std::move(j));
    }
    return Json{{"items", out}};
  }));

  // httplib reads any "/:" in a pattern as a path parameter, so the class
  // must not contain one.
  s.Post(R"(/v1/adjudication/([^/]+):resolve)", wrap([&eng](const httplib::Request& req) {
    const Json b = body_of(req);
    if (!b.contains("gold")) throw Error(ErrorCode::invalid_argument, "field 'gold' is required");
    return eng.resolve(ItemId(req.matches[1].str()), b["gold"], require_string(b, "expert_id"));
  }));

  s.Post("/v1/batches:next", wrap([&eng](const httplib::Request& req) {
    const Json b = body_of(req);
    const Stratum stage = parse_enum<Stratum>(b.value("stage", std::string("core")));
    const std::uint64_t seed = b.value("seed", eng.config().rng_seed);
    std::map<TaskId, std::vector<double>> rollouts;
    if (b.contains("rollouts")) {
      if (!b["rollouts"].is_object()) throw Error(ErrorCode::invalid_argument, "rollouts must map task ids to rewards");
      for (const auto& [id, rewards] : b["rollouts"].items()) {
        rollouts[TaskId(id)] = rewards.get<std::vector<double>>();
      }
    }
    return json::encode(eng.next_batch(stage, seed, rollouts));
  }));

  s.Get("/v1/stats", wrap([&eng](const httplib::Request&) { return eng.report(); }));

  if (!eng.config().console_dir.empty()) s.set_mount_point("/", eng.config().console_dir.string());
}

int HttpService::bind(const std::string& host, int port) {
  if (port == 0) {
    const int bound = server_->bind_to_any_port(host);
    if (bound < 0) throw Error(ErrorCode::unavailable, "cannot bind " + host);
    return bound;
  }
  if (!server_->bind_to_port(host, port)) {
    throw Error(ErrorCode::unavailable, "cannot bind " + host + ":" + std::to_string(port));
  }
  return port;
}

void HttpService::run() { server_->listen_after_bind(); }

void HttpService::stop() { server_->stop(); }

}  // namespace finforge
