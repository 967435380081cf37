// A self-contained disaster-survey scenario the console can launch for
// demos: dynamic pattern, realtime pacing, generous linger so the operator
// has time to inject waypoints and drive the mission by hand.

export const demoScenario = {
  schema: 1,
  name: "console_disaster_survey",
  pattern: "dynamic_predefined",
  seed: 7,
  dt: 0.05,
  duration_limit: 600,
  pacing: "realtime",
  scheduler: "nearest_neighbor",
  linger: 60,
  drone: { max_horizontal_speed: 1.5, max_vertical_speed: 1.0, takeoff_altitude: 1.5 },
  sensors: [
    { id: "cam1", kind: "camera", rate: 15 },
    { id: "odom", kind: "odometry", rate: 1 },
  ],
  analytics: [
    {
      id: "odometry_monitor",
      kind: "monitor",
      sensor: "odom",
      fields: ["battery", "height", "gps"],
    },
  ],
  batches: [
    {
      nav_type: "distance_driven",
      scheduling: "unordered",
      priority: 2,
      waypoints: [
        { id: "d1", target: { x: 10, y: 0, z: 1.5 }, hover_duration: 2, frame: "relative" },
        { id: "d3", target: { x: 20, y: 10, z: 1.5 }, hover_duration: 2, frame: "relative" },
        { id: "d4", target: { x: 20, y: 0, z: 1.5 }, hover_duration: 2, frame: "relative" },
        { id: "d2", target: { x: 10, y: 10, z: 1.5 }, hover_duration: 2, frame: "relative" },
      ],
    },
  ],
  injections: [
    {
      at: 30,
      batch: {
        nav_type: "analytics_driven",
        scheduling: "unordered",
        priority: 2,
        waypoints: [
          { id: "e1", target: { x: 30, y: 20, z: 1.5 }, hover_duration: 2, frame: "relative" },
          { id: "e2", target: { x: 40, y: 0, z: 1.5 }, hover_duration: 2, frame: "relative" },
          { id: "e3", target: { x: 40, y: 20, z: 1.5 }, hover_duration: 2, frame: "relative" },
        ],
      },
    },
  ],
};
