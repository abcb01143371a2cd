#pragma once

#include <string>

#include <httplib.h>

#include "hcdn/monitor/monitor.hpp"

namespace hcdn {

/// POSTs each alert as JSON to an http:// endpoint. Connection errors and
/// non-2xx responses surface as SinkUnavailable so the pipeline can record
/// the failure and continue.
class WebhookSink : public AlertSink {
 public:
  explicit WebhookSink(const std::string& url) {
    const std::string scheme = "http://";
    if (url.rfind(scheme, 0) != 0)
      raise(ErrorCode::ConfigMismatch, "webhook: only http:// sinks are supported: " + url);
    const std::string rest = url.substr(scheme.size());
    const auto slash = rest.find('/');
    host_ = slash == std::string::npos ? rest : rest.substr(0, slash);
    path_ = slash == std::string::npos ? "/" : rest.substr(slash);
    port_ = 80;
    const auto colon = host_.find(':');
    if (colon != std::string::npos) {
      try {
        port_ = std::stoi(host_.substr(colon + 1));
      } catch (const std::exception&) {
        raise(ErrorCode::ConfigMismatch, "webhook: bad port in " + url);
      }
      host_ = host_.substr(0, colon);
    }
    if (host_.empty()) raise(ErrorCode::ConfigMismatch, "webhook: missing host in " + url);
  }

  void deliver(const AlertPayload& payload) override {
    httplib::Client client(host_, port_);
    client.set_connection_timeout(5, 0);
    const auto res = client.Post(path_, alert_payload_json(payload).dump(), "application/json");
    if (!res)
      raise(ErrorCode::SinkUnavailable, "webhook: cannot reach " + host_ + ":" +
                                            std::to_string(port_));
    if (res->status / 100 != 2)
      raise(ErrorCode::SinkUnavailable,
            "webhook: endpoint returned status " + std::to_string(res->status));
  }

 private:
  std::string host_, path_;
  int port_ = 80;
};

}  // namespace hcdn
