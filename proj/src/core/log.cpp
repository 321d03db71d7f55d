#include "jndlc/core/log.hpp"

#include <iostream>
#include <utility>

namespace jndlc {
namespace {

WarningSink& sink_slot() {
  static WarningSink sink;
  return sink;
}

}  // namespace

WarningSink set_warning_sink(WarningSink sink) {
  return std::exchange(sink_slot(), std::move(sink));
}

void warn(std::string_view message) {
  if (auto& sink = sink_slot()) {
    sink(message);
    return;
  }
  std::cerr << "warning: " << message << '\n';
}

}  // namespace jndlc
