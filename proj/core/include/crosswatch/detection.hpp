#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "crosswatch/geometry.hpp"

namespace crosswatch {

// Object classes the detector may emit. "near_accident" is reserved for the
// spatial stream: such records carry candidate event regions, not road users,
// and are routed around the tracker.
enum class ObjectClass { Motorcycle, Car, Bus, Truck, NearAccident };

const char* to_string(ObjectClass c);
std::optional<ObjectClass> object_class_from_string(const std::string& s);

inline bool is_vehicle(ObjectClass c) { return c != ObjectClass::NearAccident; }

struct Detection {
    int frame = 0;
    ObjectClass object_class = ObjectClass::Car;
    geometry::BBox bbox;
    double confidence = 1.0;
    // appearance descriptor, unit norm when present; required in deepsort mode
    std::optional<Eigen::VectorXd> embedding;
};

} // namespace crosswatch
