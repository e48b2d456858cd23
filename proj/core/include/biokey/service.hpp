#pragma once

#include <chrono>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "biokey/dataio.hpp"
#include "biokey/error.hpp"
#include "biokey/learn.hpp"
#include "biokey/matcher.hpp"

namespace biokey::service {

/// Enrollment sessions expire after this much inactivity.
inline constexpr std::chrono::minutes kSessionIdleLimit{15};
inline constexpr int kDefaultPort = 8714;

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = kDefaultPort;
  std::string state_dir = "biokey-state";
  /// Served at `/` when set; a built-in page is used otherwise.
  std::string static_dir;
  std::vector<std::string> password_keys = default_password_keys();
  std::uint64_t seed = 42;
  /// Trees in the per-user classifier.
  std::size_t classifier_trees = 100;
};

enum class SessionState { Open, Finalized, Expired };
std::string to_string(SessionState s);

struct EnrollmentSession {
  std::string token;
  std::string user_id;
  std::size_t trials_required = 0;
  std::vector<std::vector<double>> key_rows;
  std::vector<std::vector<double>> eeg_rows;
  SessionState state = SessionState::Open;
  std::chrono::steady_clock::time_point last_seen;
  std::string result;  // JSON returned by finish
};

struct EnrolledUser {
  std::string user_id;
  int subject = 0;
  std::vector<std::vector<double>> key_rows;
  std::vector<std::vector<double>> eeg_rows;
};

/// Immutable view of all enrolled users and their galleries.
struct Snapshot {
  std::vector<EnrolledUser> users;
  std::optional<matcher::TemplateGallery> key_gallery;
  std::optional<matcher::TemplateGallery> eeg_gallery;
  std::uint64_t version = 0;

  const EnrolledUser* find(const std::string& user_id) const;
};

struct TrialInput {
  std::vector<KeyEvent> events;
  std::optional<std::string> eeg_ref;  // path of a recording CSV with one marker pair
};

/// Enrollment and authentication logic behind the HTTP API. Methods
/// return JSON text and throw biokey::Error on failure.
class Engine {
 public:
  using Now = std::function<std::chrono::steady_clock::time_point()>;

  explicit Engine(ServiceConfig config, Now now = {});

  std::string enroll_start(const std::string& user_id, long long trials);
  std::string enroll_trial(const std::string& token, const TrialInput& trial);
  std::string enroll_finish(const std::string& token);
  /// Majority vote over the given trials ("template" or "classifier").
  std::string authenticate(const std::string& user_id, const std::vector<TrialInput>& trials,
                           const std::string& method);
  std::string users() const;
  std::string report() const;

  std::shared_ptr<const Snapshot> snapshot() const;
  const ServiceConfig& config() const { return config_; }

  /// Keystroke feature row after checking the configured key sequence.
  std::vector<double> key_features(const std::vector<KeyEvent>& events) const;
  std::vector<double> eeg_features(const std::string& eeg_ref) const;

 private:
  EnrollmentSession& open_session(const std::string& token);
  void commit(std::shared_ptr<const Snapshot> next);
  void persist(const Snapshot& s) const;
  void load_state();
  void journal(const std::string& line) const;
  struct UserModel {
    NormStats norm;
    learn::Model model;
  };
  /// Genuine-versus-rest model for a subject, trained on first use per snapshot.
  std::shared_ptr<const UserModel> classifier(const Snapshot& s, int subject, bool eeg);

  ServiceConfig config_;
  Now now_;
  mutable std::mutex sessions_mutex_;
  std::map<std::string, EnrollmentSession> sessions_;
  std::mutex commit_mutex_;
  std::shared_ptr<const Snapshot> snapshot_;
  std::mutex model_mutex_;
  std::uint64_t models_version_ = 0;
  std::map<std::pair<int, bool>, std::shared_ptr<const UserModel>> models_;
};

/// HTTP front end on cpp-httplib.
class Service {
 public:
  explicit Service(ServiceConfig config);
  ~Service();
  /// Blocks until stop() is called.
  bool listen();
  /// Binds to an ephemeral port and returns it (for tests).
  int bind_any_port();
  bool listen_after_bind();
  void stop();
  Engine& engine();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// HTTP status for an error code.
int http_status(ErrorCode code);

}  // namespace biokey::service
