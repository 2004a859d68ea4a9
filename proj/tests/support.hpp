#pragma once

#include <doctest.h>

#include <functional>

#include "edgecache/error.hpp"
#include "fixtures.hpp"

namespace fixture {

/// Code of the Error thrown by `fn`; fails the test when nothing is thrown.
inline ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error raised");
  return ErrorCode::invalid_argument;
}

}  // namespace fixture
