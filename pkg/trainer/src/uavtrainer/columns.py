"""Raw flight-log column mapping.

The public quadrotor energy dataset ships one large CSV holding every
flight, keyed by a flight id column. The exact column names and units
are confirmed against the dataset documentation at ingestion time; the
mapping actually used is recorded in the emitted manifest so a schema
drift is visible instead of silent.

Unit conventions of the default mapping:
    time                seconds
    wind_speed          m/s, horizontal magnitude at the vehicle
    wind_angle          degrees, direction the wind blows toward,
                        measured from the +x axis of the local frame
    battery_voltage     V
    battery_current     A        (power = voltage * current)
    position_x/y/z      m, local frame, z up
    orientation_x/y/z/w unit quaternion, body to local frame
    velocity_x/y/z      m/s ground velocity
    speed               m/s commanded airspeed (informational)
    payload             grams
    altitude            m above ground
    route               route label; values in RANDOM_ROUTE_LABELS are
                        held out of training
    pressure            Pa (optional, for air density)
    temperature         K  (optional, for air density)
"""

from __future__ import annotations

from dataclasses import dataclass, field


RANDOM_ROUTE_LABELS = ("random", "R")


@dataclass(frozen=True)
class ColumnMap:
    flight_id: str = "flight"
    time: str = "time"
    wind_speed: str = "wind_speed"
    wind_angle: str = "wind_angle"
    battery_voltage: str = "battery_voltage"
    battery_current: str = "battery_current"
    velocity: tuple = ("velocity_x", "velocity_y", "velocity_z")
    orientation: tuple = ("orientation_x", "orientation_y",
                          "orientation_z", "orientation_w")
    payload: str = "payload"
    route: str = "route"
    pressure: str = "pressure"        # optional
    temperature: str = "temperature"  # optional
    payload_unit_to_kg: float = 1e-3  # grams in the published files

    def required(self) -> list[str]:
        return [self.flight_id, self.time, self.wind_speed, self.wind_angle,
                self.battery_voltage, self.battery_current,
                *self.velocity, *self.orientation, self.payload, self.route]

    def as_record(self) -> dict:
        return {
            "flight_id": self.flight_id,
            "time": self.time,
            "wind": [self.wind_speed, self.wind_angle],
            "power": [self.battery_voltage, self.battery_current],
            "velocity": list(self.velocity),
            "orientation": list(self.orientation),
            "payload": self.payload,
            "payload_unit_to_kg": self.payload_unit_to_kg,
            "route": self.route,
            "air_density_from": [self.pressure, self.temperature],
        }
