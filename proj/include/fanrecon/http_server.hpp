#pragma once

#include <httplib.h>

#include "fanrecon/service.hpp"

namespace fanrecon::service {

/// Mounts the JSON/SSE API under /api on `server`. `service` must outlive it.
///
///   GET    /api/capabilities
///   GET    /api/sessions                      POST /api/sessions
///   GET    /api/sessions/:id                  DELETE /api/sessions/:id
///   PUT    /api/sessions/:id/config
///   POST   /api/sessions/:id/data?kind=sinogram|phantom   (text body)
///   POST   /api/sessions/:id/run | continue   {"iterations": n}
///   POST   /api/sessions/:id/restart | cancel
///   GET    /api/sessions/:id/events           (text/event-stream)
///   GET    /api/sessions/:id/regions
///   PUT    /api/sessions/:id/regions/:role    {"row0","col0","rows","cols"}
///   DELETE /api/sessions/:id/regions/:role
///   GET    /api/sessions/:id/profile?axis=horizontal|vertical&index=i
///   GET    /api/sessions/:id/report
///   GET    /api/sessions/:id/history[?format=csv]
///   GET    /api/sessions/:id/image?which=reconstruction|original|sinogram&format=text|pgm
void mount_api(httplib::Server& server, Service& service);

}  // namespace fanrecon::service
