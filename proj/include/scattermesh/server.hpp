#pragma once

#include <filesystem>
#include <optional>

// Eigen must be parsed before httplib pulls in <resolv.h> and its _res macro.
#include "scattermesh/session.hpp"

#include <httplib.h>

namespace scattermesh {

// Installs the /api routes and, when given, a static mount of `ui_dir` at /ui.
// The service must outlive the server.
void mount_routes(httplib::Server& server, ScatterService& service,
                  const std::optional<std::filesystem::path>& ui_dir = {});

}  // namespace scattermesh
