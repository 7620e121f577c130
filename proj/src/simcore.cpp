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
#include "pnp/simcore.hpp"

namespace pnp {

void VirtualClock::advance_to(Micros t)
{
    if (t < m_now) {
        throw SchedulingError("virtual clock cannot move backwards (now=" + std::to_string(m_now) +
                              ", requested=" + std::to_string(t) + ")");
    }
    m_now = t;
}

EventId Scheduler::schedule(Micros at, std::string label, Action action)
{
    if (at < now()) {
        throw SchedulingError("cannot schedule '" + label + "' in the past (now=" + std::to_string(now()) +
                              ", at=" + std::to_string(at) + ")");
    }
    const EventId id = ++m_seq;
    const Key key{at, id};
    m_queue.emplace(key, Entry{id, std::move(label), std::move(action)});
    m_index.emplace(id, key);
    return id;
}

EventId Scheduler::schedule_every(Micros first_at, Micros period, std::string label, Action action)
{
    if (period == 0) {
        throw SchedulingError("periodic event '" + label + "' needs a non-zero period");
    }
    if (first_at < now()) {
        throw SchedulingError("cannot schedule '" + label + "' in the past");
    }
    const EventId handle = ++m_seq;
    m_periodic.emplace(handle, Periodic{period, std::move(label), std::move(action), 0});
    arm_periodic(handle, first_at);
    return handle;
}

void Scheduler::arm_periodic(EventId handle, Micros at)
{
    auto& p = m_periodic.at(handle);
    p.current = schedule(at, p.label, [this, handle, at] {
        auto it = m_periodic.find(handle);
        if (it == m_periodic.end()) {
            return;
        }
        // Re-arm first so the action may cancel its own series.
        arm_periodic(handle, at + it->second.period);
        auto action = it->second.action;
        if (action) {
            action();
        }
    });
}

bool Scheduler::cancel(EventId id)
{
    if (auto p = m_periodic.find(id); p != m_periodic.end()) {
        const EventId current = p->second.current;
        m_periodic.erase(p);
        cancel(current);
        return true;
    }
    auto it = m_index.find(id);
    if (it == m_index.end()) {
        return false;
    }
    m_queue.erase(it->second);
    m_index.erase(it);
    return true;
}

std::vector<FiredEvent> Scheduler::advance(Micros until)
{
    if (m_dispatching) {
        throw SchedulingError("Scheduler::advance called from inside an event action");
    }
    if (until < now()) {
        throw SchedulingError("cannot advance backwards (now=" + std::to_string(now()) +
                              ", until=" + std::to_string(until) + ")");
    }

    std::vector<FiredEvent> fired;
    m_dispatching = true;
    try {
        while (!m_queue.empty() && m_queue.begin()->first.first <= until) {
            auto node = m_queue.extract(m_queue.begin());
            m_index.erase(node.mapped().id);
            m_clock.advance_to(node.key().first);
            fired.push_back({node.mapped().id, node.key().first, node.mapped().label});
            if (node.mapped().action) {
                node.mapped().action();
            }
        }
    } catch (...) {
        m_dispatching = false;
        throw;
    }
    m_dispatching = false;
    m_clock.advance_to(until);
    return fired;
}

std::optional<Micros> Scheduler::next_event_time() const
{
    if (m_queue.empty()) {
        return std::nullopt;
    }
    return m_queue.begin()->first.first;
}

} // namespace pnp
