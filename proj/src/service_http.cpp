#include <httplib.h>

#include "pescourse/error.hpp"
#include "pescourse/service.hpp"

namespace pescourse {

using json = nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& message) {
    send_json(res, status, json{{"error", message}});
}

int status_for(const SessionError& e) {
    switch (e.kind()) {
        case SessionError::Kind::OutOfOrder: return 409;
        case SessionError::Kind::UnknownItem: return 404;
        case SessionError::Kind::BadInput: return 422;
    }
    return 400;
}

template <typename Fn>
httplib::Server::Handler guarded(Fn fn) {
    return [fn](const httplib::Request& req, httplib::Response& res) {
        try {
            fn(req, res);
        } catch (const SessionError& e) {
            send_error(res, status_for(e), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, std::string("malformed JSON: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, describe(e));
        }
    };
}

json body_of(const httplib::Request& req) {
    if (req.body.empty()) throw SessionError(SessionError::Kind::BadInput, "request body is empty");
    return json::parse(req.body);
}

std::string string_field(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key) || !body[key].is_string()) {
        throw SessionError(SessionError::Kind::BadInput, std::string("field '") + key + "' must be a string");
    }
    return body[key].get<std::string>();
}

}  // namespace

void mount_routes(httplib::Server& server, LearningService& service) {
    server.Get("/api/v1/courses", guarded([&](const httplib::Request&, httplib::Response& res) {
                   send_json(res, 200, service.list_courses());
               }));
    server.Get(R"(/api/v1/courses/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
                   auto c = service.course(req.matches[1].str());
                   if (!c) return send_error(res, 404, "unknown course");
                   send_json(res, 200, *c);
               }));
    server.Post(R"(/api/v1/users/([^/]+)/next)", guarded([&](const httplib::Request& req, httplib::Response& res) {
                    auto item = service.next(req.matches[1].str());
                    if (!item) {
                        res.status = 204;
                        return;
                    }
                    send_json(res, 200, *item);
                }));
    server.Post(R"(/api/v1/users/([^/]+)/items/([^/]+)/answer)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    const json body = body_of(req);
                    send_json(res, 200, service.answer(req.matches[1].str(), req.matches[2].str(), string_field(body, "letter")));
                }));
    server.Post(R"(/api/v1/users/([^/]+)/items/([^/]+)/grade)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    const json body = body_of(req);
                    send_json(res, 200, service.grade(req.matches[1].str(), req.matches[2].str(), string_field(body, "grade")));
                }));
    server.Get(R"(/api/v1/reports/([^/]+))", guarded([&](const httplib::Request& req, httplib::Response& res) {
                   auto r = service.report(req.matches[1].str());
                   if (!r) return send_error(res, 404, "unknown report");
                   send_json(res, 200, *r);
               }));
    server.Post(R"(/api/v1/reports/([^/]+)/annotations)",
                guarded([&](const httplib::Request& req, httplib::Response& res) {
                    send_json(res, 200, service.add_annotation(req.matches[1].str(), body_of(req)));
                }));
    server.Get("/api/v1/iaa/summary", guarded([&](const httplib::Request&, httplib::Response& res) {
                   send_json(res, 200, service.iaa());
               }));
}

}  // namespace pescourse
