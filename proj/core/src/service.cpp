#include "biokey/service.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <httplib.h>
#include <json.hpp>

#include "biokey/dsp.hpp"
#include "biokey/features.hpp"
#include "biokey/random.hpp"

namespace biokey::service {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using SteadyClock = std::chrono::steady_clock;

namespace {

constexpr char kIndexHtml[] = R"html(<!doctype html>
<html lang="en">
<head><meta charset="utf-8"><title>biokey</title>
<style>
body { font-family: sans-serif; max-width: 40em; margin: 2em auto; }
fieldset { margin-bottom: 1em; }
#log { white-space: pre-wrap; background: #f4f4f4; padding: .5em; min-height: 4em; }
</style></head>
<body>
<h1>biokey</h1>
<fieldset><legend>Enroll</legend>
User ID <input id="user"> Trials <input id="count" type="number" value="5" min="1" style="width:4em">
<button id="start">Start</button> <button id="finish">Finish</button></fieldset>
<fieldset><legend>Type the password, then press Submit</legend>
<input id="pw" autocomplete="off" style="width:20em"> <button id="submit">Submit trial</button>
<button id="auth">Authenticate</button>
<select id="method"><option>template</option><option>classifier</option></select></fieldset>
<div id="log"></div>
<script>
let token = null, events = [];
const t0 = performance.now();
const pw = document.getElementById('pw');
const log = m => document.getElementById('log').textContent = m;
pw.addEventListener('keydown', e => { if (!e.repeat) events.push({key: e.key, action: 'down', t_ms: performance.now() - t0}); });
pw.addEventListener('keyup', e => events.push({key: e.key, action: 'up', t_ms: performance.now() - t0}));
async function call(path, body) {
  const r = await fetch(path, {method: 'POST', headers: {'Content-Type': 'application/json'}, body: JSON.stringify(body)});
  return r.json();
}
function take() { const e = events; events = []; pw.value = ''; return e; }
document.getElementById('start').onclick = async () => {
  const r = await call('/api/enroll/start', {user_id: user.value, trials: Number(count.value)});
  token = r.token; log(JSON.stringify(r, null, 1));
};
document.getElementById('submit').onclick = async () => log(JSON.stringify(await call('/api/enroll/trial', {token, events: take()}), null, 1));
document.getElementById('finish').onclick = async () => log(JSON.stringify(await call('/api/enroll/finish', {token}), null, 1));
document.getElementById('auth').onclick = async () =>
  log(JSON.stringify(await call('/api/auth', {user_id: user.value, events: take(), method: method.value}), null, 1));
</script>
</body></html>
)html";

std::string new_token() {
  std::random_device rd;
  std::ostringstream os;
  os << std::hex;
  for (int i = 0; i < 4; ++i) {
    os.width(8);
    os.fill('0');
    os << static_cast<std::uint32_t>(rd());
  }
  return os.str();
}

void check_user_id(const std::string& id) {
  if (id.empty() || id.size() > 64) fail(ErrorCode::Validation, "user_id must be 1 to 64 characters");
  for (char c : id) {
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.'))
      fail(ErrorCode::Validation, "user_id may contain letters, digits, '_', '-' and '.' only");
  }
}

void write_atomic(const fs::path& path, const std::string& text) {
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Configuration, "cannot write " + tmp);
    out << text;
  }
  fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::optional<matcher::TemplateGallery> gallery_for(const std::vector<EnrolledUser>& users, bool eeg) {
  std::map<int, std::vector<std::vector<double>>> rows;
  std::size_t width = 0;
  for (const auto& u : users) {
    const auto& r = eeg ? u.eeg_rows : u.key_rows;
    if (r.empty()) continue;
    rows[u.subject] = r;
    width = r.front().size();
  }
  if (rows.empty()) return std::nullopt;
  const auto names = eeg ? features::eeg_feature_names() : features::keystroke_feature_names();
  if (width != names.size()) fail(ErrorCode::Integrity, "stored feature rows have the wrong width");
  return matcher::build_gallery(names, rows);
}

json rows_json(const std::vector<std::vector<double>>& rows) {
  json a = json::array();
  for (const auto& r : rows) a.push_back(r);
  return a;
}

}  // namespace

std::string to_string(SessionState s) {
  switch (s) {
    case SessionState::Open: return "open";
    case SessionState::Finalized: return "finalized";
    case SessionState::Expired: return "expired";
  }
  return "open";
}

const EnrolledUser* Snapshot::find(const std::string& user_id) const {
  for (const auto& u : users)
    if (u.user_id == user_id) return &u;
  return nullptr;
}

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::Auth: return 401;
    case ErrorCode::NotFound: return 404;
    case ErrorCode::Conflict:
    case ErrorCode::State: return 409;
    case ErrorCode::OpenSet: return 422;
    case ErrorCode::Configuration: return 500;
    default: return 400;
  }
}

Engine::Engine(ServiceConfig config, Now now) : config_(std::move(config)), now_(std::move(now)) {
  if (!now_) now_ = [] { return SteadyClock::now(); };
  if (config_.password_keys.size() != kPasswordLength)
    fail(ErrorCode::Configuration, "password must have " + std::to_string(kPasswordLength) + " keys");
  fs::create_directories(fs::path(config_.state_dir) / "models");
  snapshot_ = std::make_shared<const Snapshot>();
  load_state();
}

std::shared_ptr<const Snapshot> Engine::snapshot() const { return std::atomic_load(&snapshot_); }

void Engine::load_state() {
  const auto path = fs::path(config_.state_dir) / "users.json";
  if (!fs::exists(path)) return;
  auto next = std::make_shared<Snapshot>();
  try {
    const auto j = nlohmann::json::parse(read_file(path));
    next->version = j.value("version", std::uint64_t{0});
    for (const auto& u : j.at("users")) {
      EnrolledUser e;
      e.user_id = u.at("user_id").get<std::string>();
      e.subject = u.at("subject").get<int>();
      e.key_rows = u.at("key_rows").get<std::vector<std::vector<double>>>();
      e.eeg_rows = u.value("eeg_rows", std::vector<std::vector<double>>{});
      next->users.push_back(std::move(e));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Format, std::string("corrupt state file: ") + e.what());
  }
  next->key_gallery = gallery_for(next->users, false);
  next->eeg_gallery = gallery_for(next->users, true);
  std::atomic_store(&snapshot_, std::shared_ptr<const Snapshot>(std::move(next)));
}

void Engine::persist(const Snapshot& s) const {
  const fs::path dir(config_.state_dir);
  json j;
  j["version"] = s.version;
  auto& users = j["users"] = json::array();
  for (const auto& u : s.users) {
    users.push_back({{"user_id", u.user_id}, {"subject", u.subject}, {"key_rows", rows_json(u.key_rows)},
                     {"eeg_rows", rows_json(u.eeg_rows)}});
  }
  write_atomic(dir / "users.json", j.dump() + "\n");
  if (s.key_gallery) write_atomic(dir / "gallery_key.json", matcher::gallery_to_json(*s.key_gallery));
  if (s.eeg_gallery) write_atomic(dir / "gallery_eeg.json", matcher::gallery_to_json(*s.eeg_gallery));
}

void Engine::journal(const std::string& line) const {
  std::ofstream out(fs::path(config_.state_dir) / "journal.jsonl", std::ios::app | std::ios::binary);
  out << line << '\n';
}

void Engine::commit(std::shared_ptr<const Snapshot> next) {
  persist(*next);
  std::atomic_store(&snapshot_, std::move(next));
}

std::vector<double> Engine::key_features(const std::vector<KeyEvent>& events) const {
  std::vector<features::KeyPress> presses;
  try {
    presses = features::pair_key_events(events);
  } catch (const Error& e) {
    fail(ErrorCode::Validation, e.what());
  }
  if (presses.size() != kPasswordLength) {
    fail(ErrorCode::Validation, "expected " + std::to_string(kPasswordLength) + " keypresses, got " +
                                    std::to_string(presses.size()));
  }
  for (std::size_t i = 0; i < presses.size(); ++i) {
    if (presses[i].key != config_.password_keys[i])
      fail(ErrorCode::Validation, "key " + std::to_string(i + 1) + " does not match the password sequence");
  }
  return features::keystroke_features(events).values;
}

std::vector<double> Engine::eeg_features(const std::string& eeg_ref) const {
  fs::path path(eeg_ref);
  if (path.is_relative()) path = fs::path(config_.state_dir) / path;
  if (!fs::exists(path)) fail(ErrorCode::NotFound, "EEG trial not found: " + eeg_ref);
  const auto rec = dataio::load_recording(path);
  const auto pre = dsp::preprocess(rec, {});
  if (pre.trials.size() != 1) fail(ErrorCode::Validation, "EEG reference must hold exactly one trial");
  return features::eeg_feature_vector(pre.trials.front()).values;
}

std::string Engine::enroll_start(const std::string& user_id, long long trials) {
  check_user_id(user_id);
  if (trials < 1) fail(ErrorCode::Validation, "trials must be at least 1");
  if (trials > 1000) fail(ErrorCode::Validation, "trials must be at most 1000");
  std::lock_guard lock(sessions_mutex_);
  const auto now = now_();
  for (auto& [_, s] : sessions_) {
    if (s.state == SessionState::Open && now - s.last_seen > kSessionIdleLimit) s.state = SessionState::Expired;
    if (s.user_id == user_id && s.state == SessionState::Open)
      fail(ErrorCode::Conflict, "an enrollment session is already open for " + user_id);
  }
  EnrollmentSession s;
  s.token = new_token();
  s.user_id = user_id;
  s.trials_required = static_cast<std::size_t>(trials);
  s.last_seen = now;
  const auto token = s.token;
  sessions_.emplace(token, std::move(s));
  journal(json{{"event", "start"}, {"user_id", user_id}, {"trials", trials}}.dump());
  return json{{"token", token}, {"user_id", user_id}, {"trials_required", trials}, {"state", "open"}}.dump();
}

EnrollmentSession& Engine::open_session(const std::string& token) {
  const auto it = sessions_.find(token);
  if (it == sessions_.end()) fail(ErrorCode::Auth, "unknown session token");
  auto& s = it->second;
  if (s.state == SessionState::Open && now_() - s.last_seen > kSessionIdleLimit) s.state = SessionState::Expired;
  if (s.state == SessionState::Expired) fail(ErrorCode::Auth, "session expired");
  return s;
}

std::string Engine::enroll_trial(const std::string& token, const TrialInput& trial) {
  // Feature extraction happens outside the session lock.
  const auto key = key_features(trial.events);
  std::optional<std::vector<double>> eeg;
  if (trial.eeg_ref) eeg = eeg_features(*trial.eeg_ref);

  std::lock_guard lock(sessions_mutex_);
  auto& s = open_session(token);
  if (s.state == SessionState::Finalized) fail(ErrorCode::State, "session is already finalized");
  if (s.key_rows.size() >= s.trials_required)
    fail(ErrorCode::Conflict, "session already has all " + std::to_string(s.trials_required) + " trials");
  if (eeg && !s.eeg_rows.empty() && s.eeg_rows.size() != s.key_rows.size())
    fail(ErrorCode::Validation, "EEG must be supplied for every trial or for none");
  s.key_rows.push_back(key);
  if (eeg) s.eeg_rows.push_back(*eeg);
  s.last_seen = now_();
  journal(json{{"event", "trial"}, {"user_id", s.user_id}, {"trial", s.key_rows.size()}}.dump());
  return json{{"user_id", s.user_id},
              {"trials_received", s.key_rows.size()},
              {"trials_required", s.trials_required},
              {"eeg_trials", s.eeg_rows.size()}}
      .dump();
}

std::string Engine::enroll_finish(const std::string& token) {
  std::lock_guard lock(sessions_mutex_);
  auto& s = open_session(token);
  if (s.state == SessionState::Finalized) return s.result;
  if (s.key_rows.empty()) fail(ErrorCode::InsufficientData, "no trials have been submitted");
  if (!s.eeg_rows.empty() && s.eeg_rows.size() != s.key_rows.size())
    fail(ErrorCode::Validation, "EEG must be supplied for every trial or for none");

  std::lock_guard commit_lock(commit_mutex_);
  const auto current = snapshot();
  auto next = std::make_shared<Snapshot>(*current);
  next->version = current->version + 1;
  auto it = std::find_if(next->users.begin(), next->users.end(),
                         [&](const EnrolledUser& u) { return u.user_id == s.user_id; });
  if (it == next->users.end()) {
    int subject = 0;
    for (const auto& u : next->users) subject = std::max(subject, u.subject + 1);
    next->users.push_back({s.user_id, subject, {}, {}});
    it = std::prev(next->users.end());
  }
  if (!s.eeg_rows.empty() && it->eeg_rows.size() != it->key_rows.size())
    fail(ErrorCode::Validation, "user was enrolled without EEG; EEG cannot be added to some trials only");
  it->key_rows.insert(it->key_rows.end(), s.key_rows.begin(), s.key_rows.end());
  if (!s.eeg_rows.empty() || !it->eeg_rows.empty()) {
    if (s.eeg_rows.empty()) fail(ErrorCode::Validation, "user has EEG templates; EEG is required for every trial");
    it->eeg_rows.insert(it->eeg_rows.end(), s.eeg_rows.begin(), s.eeg_rows.end());
  }
  const auto user = *it;
  next->key_gallery = gallery_for(next->users, false);
  next->eeg_gallery = gallery_for(next->users, true);
  commit(next);

  s.state = SessionState::Finalized;
  s.last_seen = now_();
  s.result = json{{"user_id", user.user_id},
                  {"subject", user.subject},
                  {"state", "finalized"},
                  {"trials_added", s.key_rows.size()},
                  {"templates", next->key_gallery->groups.at(user.subject).size()},
                  {"eeg_templates", user.eeg_rows.size()},
                  {"users", next->users.size()}}
                 .dump();
  journal(json{{"event", "finish"}, {"user_id", s.user_id}, {"trials", s.key_rows.size()}}.dump());
  return s.result;
}

std::shared_ptr<const Engine::UserModel> Engine::classifier(const Snapshot& s, int subject, bool eeg) {
  std::lock_guard lock(model_mutex_);
  if (models_version_ != s.version) {
    models_.clear();
    models_version_ = s.version;
  }
  const auto key = std::make_pair(subject, eeg);
  if (auto it = models_.find(key); it != models_.end()) return it->second;

  FeatureMatrix m;
  std::vector<int> y;
  for (const auto& u : s.users) {
    for (const auto& r : eeg ? u.eeg_rows : u.key_rows) {
      m.rows.append_row(r);
      m.labels.push_back({u.subject, 0, 0});
      y.push_back(u.subject == subject ? 1 : 0);
    }
  }
  m.feature_names = eeg ? features::eeg_feature_names() : features::keystroke_feature_names();
  auto [norm, stats] = features::minmax_normalize(m);
  learn::ModelSpec spec;
  spec.n_trees = config_.classifier_trees;
  spec.seed = derive_seed(config_.seed, {static_cast<std::uint64_t>(subject), eeg ? 1u : 0u});
  auto um = std::make_shared<UserModel>(UserModel{std::move(stats), learn::Model::fit(spec, norm.rows, y)});
  write_atomic(fs::path(config_.state_dir) / "models" /
                   ("subject_" + std::to_string(subject) + (eeg ? "_eeg" : "_key") + ".json"),
               um->model.to_json());
  models_[key] = um;
  return um;
}

std::string Engine::authenticate(const std::string& user_id, const std::vector<TrialInput>& trials,
                                 const std::string& method) {
  if (method != "template" && method != "classifier")
    fail(ErrorCode::Validation, "method must be 'template' or 'classifier'");
  if (trials.empty()) fail(ErrorCode::Validation, "no trial supplied");
  const auto snap = snapshot();
  const auto* user = snap->find(user_id);
  if (!user) fail(ErrorCode::NotFound, "user " + user_id + " is not enrolled");

  struct Prepared {
    std::vector<double> key;
    std::optional<std::vector<double>> eeg;
  };
  std::vector<Prepared> prepared;
  for (const auto& t : trials) {
    Prepared p{key_features(t.events), std::nullopt};
    if (t.eeg_ref) p.eeg = eeg_features(*t.eeg_ref);
    prepared.push_back(std::move(p));
  }

  json per_trial = json::array();
  std::size_t accepted = 0;
  double score_sum = 0.0, latency_sum = 0.0;
  for (const auto& p : prepared) {
    bool accept = false;
    double score = 0.0;
    bool used_eeg = false;
    double latency_ms = 0.0;
    if (method == "template") {
      const auto& g = *snap->key_gallery;
      const auto t0 = SteadyClock::now();
      const auto d = matcher::authenticate_template(g.binarize(std::span<const double>(p.key)), g, user->subject);
      latency_ms = std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
      accept = d.accept;
      score = d.score;
    } else {
      const bool others = snap->users.size() > 1;
      const auto km = classifier(*snap, user->subject, false);
      std::shared_ptr<const UserModel> em;
      used_eeg = p.eeg && !user->eeg_rows.empty();
      if (used_eeg) em = classifier(*snap, user->subject, true);
      auto genuine_p = [](const UserModel& um, const std::vector<double>& row) {
        Matrix x(1, row.size());
        std::copy(row.begin(), row.end(), x.row(0).begin());
        features::apply_norm_stats(x, um.norm);
        const auto proba = um.model.predict_proba_row(x.row(0));
        const auto& cls = um.model.classes();
        const auto it = std::find(cls.begin(), cls.end(), 1);
        return it == cls.end() ? 0.0 : proba[static_cast<std::size_t>(it - cls.begin())];
      };
      const auto t0 = SteadyClock::now();
      const double pk = genuine_p(*km, p.key);
      const double pe = used_eeg ? genuine_p(*em, *p.eeg) : 0.0;
      latency_ms = std::chrono::duration<double, std::milli>(SteadyClock::now() - t0).count();
      // Without other enrolled users the model has never seen an imposter.
      if (used_eeg) {
        score = pk + pe;
        accept = others && score >= 1.0;
        score *= 0.5;
      } else {
        score = pk;
        accept = others && pk >= 0.5;
      }
    }
    accepted += accept;
    score_sum += score;
    latency_sum += latency_ms;
    per_trial.push_back({{"decision", accept ? "accept" : "reject"}, {"score", score}, {"latency_ms", latency_ms},
                         {"eeg", used_eeg}});
  }
  const bool decision = 2 * accepted > prepared.size();
  return json{{"user_id", user_id},
              {"method", method},
              {"decision", decision ? "accept" : "reject"},
              {"score", score_sum / static_cast<double>(prepared.size())},
              {"latency_ms", latency_sum / static_cast<double>(prepared.size())},
              {"accepted_trials", accepted},
              {"trials", per_trial}}
      .dump();
}

std::string Engine::users() const {
  const auto snap = snapshot();
  json list = json::array();
  for (const auto& u : snap->users) {
    list.push_back({{"user_id", u.user_id},
                    {"subject", u.subject},
                    {"templates", u.key_rows.size()},
                    {"eeg_templates", u.eeg_rows.size()}});
  }
  return json{{"users", list}, {"version", snap->version}}.dump();
}

std::string Engine::report() const {
  const auto path = fs::path(config_.state_dir) / "report.json";
  if (!fs::exists(path)) fail(ErrorCode::NotFound, "no evaluation report in the state directory");
  return read_file(path);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<KeyEvent> parse_events(const nlohmann::json& j) {
  if (!j.is_array()) fail(ErrorCode::Validation, "events must be an array");
  std::vector<KeyEvent> out;
  for (const auto& e : j) {
    if (!e.is_object() || !e.contains("key") || !e.contains("action") || !e.contains("t_ms"))
      fail(ErrorCode::Validation, "each event needs key, action and t_ms");
    if (!e["key"].is_string() || !e["action"].is_string() || !e["t_ms"].is_number())
      fail(ErrorCode::Validation, "event fields have the wrong type");
    KeyEvent k;
    k.key = e["key"].get<std::string>();
    const auto action = e["action"].get<std::string>();
    if (action == "down") k.action = KeyAction::Down;
    else if (action == "up") k.action = KeyAction::Up;
    else fail(ErrorCode::Validation, "action must be 'down' or 'up'");
    k.t_ms = e["t_ms"].get<double>();
    if (!std::isfinite(k.t_ms)) fail(ErrorCode::Validation, "t_ms must be finite");
    out.push_back(std::move(k));
  }
  return out;
}

TrialInput parse_trial(const nlohmann::json& j, const nlohmann::json& events) {
  TrialInput t;
  t.events = parse_events(events);
  if (j.contains("eeg_ref") && !j["eeg_ref"].is_null()) {
    if (!j["eeg_ref"].is_string()) fail(ErrorCode::Validation, "eeg_ref must be a string");
    t.eeg_ref = j["eeg_ref"].get<std::string>();
  }
  return t;
}

nlohmann::json body_of(const httplib::Request& req) {
  try {
    auto j = nlohmann::json::parse(req.body);
    if (!j.is_object()) fail(ErrorCode::Validation, "request body must be a JSON object");
    return j;
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::Validation, "request body is not valid JSON");
  }
}

template <typename T>
T field(const nlohmann::json& j, const char* name) {
  if (!j.contains(name)) fail(ErrorCode::Validation, std::string("missing field: ") + name);
  try {
    return j[name].get<T>();
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::Validation, std::string("field has the wrong type: ") + name);
  }
}

}  // namespace

struct Service::Impl {
  ServiceConfig config;
  Engine engine;
  httplib::Server server;

  explicit Impl(ServiceConfig c) : config(c), engine(std::move(c)) { routes(); }

  template <typename F>
  httplib::Server::Handler wrap(F f) {
    return [f](const httplib::Request& req, httplib::Response& res) {
      try {
        res.set_content(f(req), "application/json");
      } catch (const Error& e) {
        res.status = http_status(e.code());
        res.set_content(json{{"code", std::string(to_string(e.code()))}, {"message", e.what()}}.dump(),
                        "application/json");
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(json{{"code", "internal_error"}, {"message", e.what()}}.dump(), "application/json");
      }
    };
  }

  void routes() {
    server.Post("/api/enroll/start", wrap([this](const httplib::Request& req) {
      const auto j = body_of(req);
      return engine.enroll_start(field<std::string>(j, "user_id"), field<long long>(j, "trials"));
    }));
    server.Post("/api/enroll/trial", wrap([this](const httplib::Request& req) {
      const auto j = body_of(req);
      if (!j.contains("events")) fail(ErrorCode::Validation, "missing field: events");
      return engine.enroll_trial(field<std::string>(j, "token"), parse_trial(j, j["events"]));
    }));
    server.Post("/api/enroll/finish", wrap([this](const httplib::Request& req) {
      return engine.enroll_finish(field<std::string>(body_of(req), "token"));
    }));
    server.Post("/api/auth", wrap([this](const httplib::Request& req) {
      const auto j = body_of(req);
      std::vector<TrialInput> trials;
      if (j.contains("trials")) {
        if (!j["trials"].is_array()) fail(ErrorCode::Validation, "trials must be an array");
        for (const auto& t : j["trials"]) {
          if (t.is_array()) trials.push_back(parse_trial(nlohmann::json::object(), t));
          else if (t.is_object() && t.contains("events")) trials.push_back(parse_trial(t, t["events"]));
          else fail(ErrorCode::Validation, "each trial must be an event array or an object with events");
        }
      } else {
        if (!j.contains("events")) fail(ErrorCode::Validation, "missing field: events");
        trials.push_back(parse_trial(j, j["events"]));
      }
      const auto method = j.contains("method") ? field<std::string>(j, "method") : std::string("template");
      return engine.authenticate(field<std::string>(j, "user_id"), trials, method);
    }));
    server.Get("/api/users", wrap([this](const httplib::Request&) { return engine.users(); }));
    server.Get("/api/report", wrap([this](const httplib::Request&) { return engine.report(); }));

    if (!config.static_dir.empty()) {
      if (!server.set_mount_point("/", config.static_dir))
        fail(ErrorCode::Configuration, "static directory not found: " + config.static_dir);
    } else {
      server.Get("/", [](const httplib::Request&, httplib::Response& res) { res.set_content(kIndexHtml, "text/html"); });
    }
  }
};

Service::Service(ServiceConfig config) : impl_(std::make_unique<Impl>(std::move(config))) {}
Service::~Service() = default;

bool Service::listen() { return impl_->server.listen(impl_->config.host, impl_->config.port); }
int Service::bind_any_port() { return impl_->server.bind_to_any_port(impl_->config.host); }
bool Service::listen_after_bind() { return impl_->server.listen_after_bind(); }
void Service::stop() { impl_->server.stop(); }
Engine& Service::engine() { return impl_->engine; }

}  // namespace biokey::service
