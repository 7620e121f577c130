/* Copyright 2026 The PlayNPort Simulator Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
*/
/*
    Virtual-time event scheduler. Every device model in the board is advanced
    only through a Scheduler, so a run is a pure function of its inputs.
*/
#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pnp {

// Virtual time in integer microseconds.
using Micros = std::uint64_t;

constexpr Micros kMillis = 1000;
constexpr Micros kSeconds = 1000 * kMillis;

class SchedulingError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

class VirtualClock {
public:
    Micros now() const noexcept { return m_now; }

    // Moves the clock forward; rejects any attempt to go backwards.
    void advance_to(Micros t);

private:
    Micros m_now = 0;
};

using EventId = std::uint64_t;

struct FiredEvent {
    EventId id;
    Micros fire_at;
    std::string label;

    bool operator==(const FiredEvent&) const = default;
};

class Scheduler {
public:
    using Action = std::function<void()>;

    Micros now() const noexcept { return m_clock.now(); }
    const VirtualClock& clock() const noexcept { return m_clock; }

    // Enqueues an event at absolute time `at`. Events sharing a timestamp
    // fire in insertion order.
    EventId schedule(Micros at, std::string label, Action action = {});
    EventId schedule_in(Micros delay, std::string label, Action action = {})
    {
        return schedule(now() + delay, std::move(label), std::move(action));
    }

    // Schedules `action` at first_at, first_at + period, ... until the
    // returned handle is cancelled.
    EventId schedule_every(Micros first_at, Micros period, std::string label, Action action);

    bool cancel(EventId id);

    // Dispatches every event with fire_at <= until in (fire_at, seq) order
    // and leaves the clock at `until`. Actions may schedule more events;
    // those that fall inside the window fire in the same call.
    std::vector<FiredEvent> advance(Micros until);
    std::vector<FiredEvent> advance_by(Micros delta) { return advance(now() + delta); }

    std::optional<Micros> next_event_time() const;
    std::size_t pending() const noexcept { return m_queue.size(); }
    bool dispatching() const noexcept { return m_dispatching; }

private:
    struct Entry {
        EventId id;
        std::string label;
        Action action;
    };
    using Key = std::pair<Micros, std::uint64_t>;

    struct Periodic {
        Micros period;
        std::string label;
        Action action;
        EventId current;
    };

    void arm_periodic(EventId handle, Micros at);

    VirtualClock m_clock;
    std::map<Key, Entry> m_queue;
    std::unordered_map<EventId, Key> m_index;
    std::unordered_map<EventId, Periodic> m_periodic;
    std::uint64_t m_seq = 0;
    bool m_dispatching = false;
};

} // namespace pnp
