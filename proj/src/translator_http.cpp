#include "knowtrans/augment.hpp"

#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"

namespace knowtrans {

HttpTranslator::HttpTranslator(std::string base_url, int timeout_seconds) : timeout_seconds_(timeout_seconds) {
    const auto scheme = base_url.find("://");
    if (scheme == std::string::npos) throw TranslatorError("translator URL needs a scheme: " + base_url);
    const auto path = base_url.find('/', scheme + 3);
    host_ = base_url.substr(0, path);
    prefix_ = path == std::string::npos ? std::string{} : base_url.substr(path);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
}

std::vector<std::string> HttpTranslator::call(const std::string& endpoint, const std::vector<std::string>& texts,
                                              const std::string& pivot) {
    httplib::Client client(host_);
    client.set_connection_timeout(timeout_seconds_);
    client.set_read_timeout(timeout_seconds_);
    const nlohmann::json body{{"texts", texts}, {"pivot", pivot}};
    auto res = client.Post(prefix_ + endpoint, body.dump(), "application/json");
    if (!res) {
        throw TranslatorError("POST " + host_ + prefix_ + endpoint + " failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw TranslatorError("POST " + host_ + prefix_ + endpoint + " returned HTTP " + std::to_string(res->status));
    }
    std::vector<std::string> out;
    try {
        out = nlohmann::json::parse(res->body).at("texts").get<std::vector<std::string>>();
    } catch (const nlohmann::json::exception& e) {
        throw TranslatorError("malformed translator response: " + std::string(e.what()));
    }
    if (out.size() != texts.size()) {
        throw TranslatorError("translator returned " + std::to_string(out.size()) + " texts for " +
                              std::to_string(texts.size()));
    }
    return out;
}

std::vector<std::string> HttpTranslator::translate(const std::vector<std::string>& texts, const std::string& pivot) {
    return call("/translate", texts, pivot);
}

std::vector<std::string> HttpTranslator::back_translate(const std::vector<std::string>& texts,
                                                        const std::string& pivot) {
    return call("/back_translate", texts, pivot);
}

}  // namespace knowtrans
