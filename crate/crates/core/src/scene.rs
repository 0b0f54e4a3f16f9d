//! Synthetic navigable worlds: occupancy grids, deterministic procedural
//! generation, and per-pixel depth rendering.
//!
//! The world is 2.5D: blocked cells are full-height columns standing on a
//! flat floor at y = 0 (y points down, so heights are negative y). The
//! camera rides at [`AGENT_HEIGHT_M`] above the floor.

use std::io::{Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{unproject, CameraModel, PixelPoint, Pose, Vec3};

/// Camera height above the floor, in meters.
pub const AGENT_HEIGHT_M: f64 = 1.5;

const GOAL_LABELS: [&str; 8] =
    ["chair", "table", "plant", "sofa", "lamp", "sink", "bed", "television"];

const NVDM_MAGIC: &[u8; 4] = b"NVDM";

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("grid must be at least 8x8 cells, got {cols}x{rows}")]
    TooSmall { cols: usize, rows: usize },
    #[error("no navigable layout found after {attempts} attempts")]
    Unsatisfiable { attempts: usize },
    #[error("pose is not inside a navigable cell")]
    PoseBlocked,
    #[error("occupancy length {got} does not match {cols}x{rows}")]
    BadOccupancy { cols: usize, rows: usize, got: usize },
    #[error("invalid scene file: {0}")]
    Schema(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Row-major grid of blocked/free cells. Row 0 spans z in [0, cell_size),
/// column 0 spans x in [0, cell_size). Boundary cells are always blocked.
#[derive(Debug, Clone, PartialEq)]
pub struct OccupancyGrid {
    cols: usize,
    rows: usize,
    cell_size: f64,
    wall_height: f64,
    blocked: Vec<bool>,
}

impl OccupancyGrid {
    /// Builds a grid from an explicit bitmap, forcing the boundary blocked.
    pub fn new(
        cols: usize,
        rows: usize,
        cell_size: f64,
        wall_height: f64,
        mut blocked: Vec<bool>,
    ) -> Result<Self, SceneError> {
        if blocked.len() != cols * rows {
            return Err(SceneError::BadOccupancy { cols, rows, got: blocked.len() });
        }
        assert!(cell_size > 0.0 && wall_height > 0.0, "grid scales must be positive");
        for c in 0..cols {
            blocked[c] = true;
            blocked[(rows - 1) * cols + c] = true;
        }
        for r in 0..rows {
            blocked[r * cols] = true;
            blocked[r * cols + cols - 1] = true;
        }
        Ok(OccupancyGrid { cols, rows, cell_size, wall_height, blocked })
    }

    /// An all-free interior with blocked boundary.
    pub fn empty(cols: usize, rows: usize, cell_size: f64, wall_height: f64) -> Self {
        Self::new(cols, rows, cell_size, wall_height, vec![false; cols * rows])
            .expect("length matches by construction")
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cell_size(&self) -> f64 {
        self.cell_size
    }

    pub fn wall_height(&self) -> f64 {
        self.wall_height
    }

    pub fn block(&mut self, row: usize, col: usize) {
        self.blocked[row * self.cols + col] = true;
    }

    pub fn is_blocked(&self, row: usize, col: usize) -> bool {
        self.blocked[row * self.cols + col]
    }

    pub fn in_bounds(&self, row: isize, col: isize) -> bool {
        row >= 0 && col >= 0 && (row as usize) < self.rows && (col as usize) < self.cols
    }

    /// Grid cell containing the world point (x, z), if inside the grid.
    pub fn cell_of(&self, x: f64, z: f64) -> Option<(usize, usize)> {
        if x < 0.0 || z < 0.0 {
            return None;
        }
        let col = (x / self.cell_size) as usize;
        let row = (z / self.cell_size) as usize;
        if row < self.rows && col < self.cols {
            Some((row, col))
        } else {
            None
        }
    }

    /// Floor-level center of a cell.
    pub fn cell_center(&self, row: usize, col: usize) -> Vec3 {
        Vec3::new(
            (col as f64 + 0.5) * self.cell_size,
            0.0,
            (row as f64 + 0.5) * self.cell_size,
        )
    }

    /// Serializes the bitmap as a row-major 0/1 string ('1' = blocked).
    pub fn occupancy_string(&self) -> String {
        self.blocked.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    fn free_cells(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for r in 0..self.rows {
            for c in 0..self.cols {
                if !self.is_blocked(r, c) {
                    out.push((r, c));
                }
            }
        }
        out
    }
}

/// A navigation goal: a label (the instruction target) at a floor position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Goal {
    pub label: String,
    pub position: Vec3,
}

/// A generated world: grid, spawn pose, goals, and the seed that made it.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub grid: OccupancyGrid,
    pub spawn: Pose,
    pub goals: Vec<Goal>,
    pub seed: u64,
}

impl Scene {
    /// The spawn's floor position (camera height removed).
    pub fn spawn_ground(&self) -> Vec3 {
        Vec3::new(self.spawn.position.x, 0.0, self.spawn.position.z)
    }
}

/// Generation knobs. `rooms = 1` means a single open room; each extra room
/// adds one dividing wall with a two-cell doorway.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenParams {
    pub cols: usize,
    pub rows: usize,
    pub cell_size: f64,
    pub rooms: usize,
    pub obstacle_density: f64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams { cols: 16, rows: 16, cell_size: 0.5, rooms: 1, obstacle_density: 0.12 }
    }
}

const WALL_HEIGHT_M: f64 = 2.5;
const GEN_ATTEMPTS: usize = 32;

/// Deterministically generates a scene: same (seed, params) — same scene,
/// byte for byte. Retries with derived sub-seeds when obstacles disconnect
/// spawn from goal, and errors out if no navigable layout appears within a
/// bounded number of attempts.
pub fn generate_scene(seed: u64, params: &GenParams) -> Result<Scene, SceneError> {
    if params.cols < 8 || params.rows < 8 {
        return Err(SceneError::TooSmall { cols: params.cols, rows: params.rows });
    }
    assert!(
        (0.0..1.0).contains(&params.obstacle_density),
        "obstacle_density must be in [0, 1)"
    );
    for attempt in 0..GEN_ATTEMPTS {
        let sub_seed = seed ^ (attempt as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed);
        if let Some(scene) = try_generate(seed, params, &mut rng) {
            return Ok(scene);
        }
    }
    Err(SceneError::Unsatisfiable { attempts: GEN_ATTEMPTS })
}

fn try_generate(seed: u64, params: &GenParams, rng: &mut ChaCha8Rng) -> Option<Scene> {
    let (cols, rows) = (params.cols, params.rows);
    let mut grid = OccupancyGrid::empty(cols, rows, params.cell_size, WALL_HEIGHT_M);

    for _ in 1..params.rooms {
        if rng.random::<bool>() {
            // Vertical divider with a 2-cell doorway.
            let c = rng.random_range(2..cols - 2);
            let door = rng.random_range(1..rows - 2);
            for r in 1..rows - 1 {
                if r != door && r != door + 1 {
                    grid.block(r, c);
                }
            }
        } else {
            let r = rng.random_range(2..rows - 2);
            let door = rng.random_range(1..cols - 2);
            for c in 1..cols - 1 {
                if c != door && c != door + 1 {
                    grid.block(r, c);
                }
            }
        }
    }

    for r in 1..rows - 1 {
        for c in 1..cols - 1 {
            if !grid.is_blocked(r, c) && rng.random::<f64>() < params.obstacle_density {
                grid.block(r, c);
            }
        }
    }

    let free = grid.free_cells();
    if free.len() < 2 {
        return None;
    }
    let spawn_cell = free[rng.random_range(0..free.len())];
    let reachable = flood_fill(&grid, spawn_cell);

    // Prefer goals a few cells away so paths are non-trivial.
    let candidates: Vec<(usize, usize)> = {
        let far: Vec<(usize, usize)> = free
            .iter()
            .copied()
            .filter(|&(r, c)| {
                reachable[r * cols + c]
                    && (r, c) != spawn_cell
                    && r.abs_diff(spawn_cell.0).max(c.abs_diff(spawn_cell.1)) >= 4
            })
            .collect();
        if far.is_empty() {
            free.iter()
                .copied()
                .filter(|&(r, c)| reachable[r * cols + c] && (r, c) != spawn_cell)
                .collect()
        } else {
            far
        }
    };
    if candidates.is_empty() {
        return None;
    }
    let goal_cell = candidates[rng.random_range(0..candidates.len())];
    let label = GOAL_LABELS[rng.random_range(0..GOAL_LABELS.len())];
    let yaw = [0.0, 90.0, 180.0, 270.0][rng.random_range(0..4)];

    let spawn_floor = grid.cell_center(spawn_cell.0, spawn_cell.1);
    let spawn = Pose::level(
        Vec3::new(spawn_floor.x, -AGENT_HEIGHT_M, spawn_floor.z),
        yaw,
    );
    let goal = Goal {
        label: label.to_owned(),
        position: grid.cell_center(goal_cell.0, goal_cell.1),
    };
    Some(Scene { grid, spawn, goals: vec![goal], seed })
}

/// 4-connected reachability from `start`. Conservative with respect to the
/// pathfinder's 8-connected moves: anything reachable here is reachable
/// there.
fn flood_fill(grid: &OccupancyGrid, start: (usize, usize)) -> Vec<bool> {
    let mut seen = vec![false; grid.cols * grid.rows];
    let mut queue = std::collections::VecDeque::new();
    seen[start.0 * grid.cols + start.1] = true;
    queue.push_back(start);
    while let Some((r, c)) = queue.pop_front() {
        for (dr, dc) in [(-1isize, 0isize), (1, 0), (0, -1), (0, 1)] {
            let (nr, nc) = (r as isize + dr, c as isize + dc);
            if grid.in_bounds(nr, nc) {
                let (nr, nc) = (nr as usize, nc as usize);
                if !grid.is_blocked(nr, nc) && !seen[nr * grid.cols + nc] {
                    seen[nr * grid.cols + nc] = true;
                    queue.push_back((nr, nc));
                }
            }
        }
    }
    seen
}

/// True iff the cell containing the position (by x/z; height is ignored)
/// is inside the grid and unblocked.
pub fn is_navigable(scene: &Scene, position: Vec3) -> bool {
    match scene.grid.cell_of(position.x, position.z) {
        Some((r, c)) => !scene.grid.is_blocked(r, c),
        None => false,
    }
}

/// Per-pixel depth raster. Depths are meters along the camera z-axis;
/// infinity marks sky pixels that hit nothing.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthMap {
    pub width: u32,
    pub height: u32,
    depths: Vec<f32>,
}

impl DepthMap {
    /// Builds a map from an explicit raster (row-major, meters, infinity
    /// for sky). Panics if the raster length does not match.
    pub fn from_raster(width: u32, height: u32, depths: Vec<f32>) -> Self {
        assert_eq!(
            depths.len(),
            (width as usize) * (height as usize),
            "raster length must be width*height"
        );
        DepthMap { width, height, depths }
    }

    pub fn depth_at(&self, col: u32, row: u32) -> f32 {
        self.depths[(row * self.width + col) as usize]
    }

    /// Depth under a continuous pixel coordinate; `None` outside the image.
    /// The inclusive right/bottom edges fold into the last pixel.
    pub fn sample(&self, p: PixelPoint) -> Option<f64> {
        let (w, h) = (f64::from(self.width), f64::from(self.height));
        if !(0.0..=w).contains(&p.x) || !(0.0..=h).contains(&p.y) {
            return None;
        }
        let col = (p.x as u32).min(self.width - 1);
        let row = (p.y as u32).min(self.height - 1);
        Some(f64::from(self.depth_at(col, row)))
    }

    pub fn raster(&self) -> &[f32] {
        &self.depths
    }

    /// Writes the raster: 16-byte header (magic `NVDM`, u32 LE width,
    /// u32 LE height, 4 reserved zero bytes), then row-major little-endian
    /// f32 meters. Infinity is stored as the largest finite f32.
    pub fn save(&self, path: &Path) -> Result<(), SceneError> {
        let mut buf = Vec::with_capacity(16 + self.depths.len() * 4);
        buf.extend_from_slice(NVDM_MAGIC);
        buf.extend_from_slice(&self.width.to_le_bytes());
        buf.extend_from_slice(&self.height.to_le_bytes());
        buf.extend_from_slice(&[0u8; 4]);
        for &d in &self.depths {
            let stored = if d.is_finite() { d } else { f32::MAX };
            buf.extend_from_slice(&stored.to_le_bytes());
        }
        std::fs::write(path, buf)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self, SceneError> {
        let mut file = std::fs::File::open(path)?;
        let mut header = [0u8; 16];
        file.read_exact(&mut header)
            .map_err(|_| SceneError::Schema("depth file shorter than its header".into()))?;
        if &header[0..4] != NVDM_MAGIC {
            return Err(SceneError::Schema("bad depth-file magic".into()));
        }
        let width = u32::from_le_bytes(header[4..8].try_into().unwrap());
        let height = u32::from_le_bytes(header[8..12].try_into().unwrap());
        let count = (width as usize) * (height as usize);
        let mut raw = Vec::new();
        file.read_to_end(&mut raw)?;
        if raw.len() != count * 4 {
            return Err(SceneError::Schema(format!(
                "depth raster holds {} bytes, expected {}",
                raw.len(),
                count * 4
            )));
        }
        let depths = raw
            .chunks_exact(4)
            .map(|b| {
                let v = f32::from_le_bytes(b.try_into().unwrap());
                if v == f32::MAX {
                    f32::INFINITY
                } else {
                    v
                }
            })
            .collect();
        Ok(DepthMap { width, height, depths })
    }
}

/// Depth along the camera z-axis for a single ray through `pixel`.
///
/// Fixed-step march (cell_size / 4) against blocked cells between the floor
/// and the wall tops; the floor hit itself is analytic, so level and upward
/// rays that clear the walls return infinity.
pub fn ray_depth(scene: &Scene, pose: &Pose, cam: &CameraModel, pixel: PixelPoint) -> f64 {
    let grid = &scene.grid;
    let dir_cam = unproject(pixel, 1.0, cam).expect("unit depth is positive");
    let inv_n = 1.0 / dir_cam.norm();
    let dz_cam = inv_n; // camera-z component of the unit direction
    let dir = pose.rotation.rotate(dir_cam) * inv_n;
    let o = pose.position;

    let t_floor = if dir.y > 1e-12 { -o.y / dir.y } else { f64::INFINITY };

    // Last t at which the ray can still be over the grid (slab exit).
    let max_x = grid.cols as f64 * grid.cell_size;
    let max_z = grid.rows as f64 * grid.cell_size;
    let slab = |origin: f64, d: f64, max: f64| -> f64 {
        if d > 1e-12 {
            (max - origin) / d
        } else if d < -1e-12 {
            -origin / d
        } else {
            f64::INFINITY
        }
    };
    let t_exit = slab(o.x, dir.x, max_x).min(slab(o.z, dir.z, max_z));
    let t_limit = t_floor.min(t_exit);

    let step = grid.cell_size / 4.0;
    let mut k = 1u64;
    loop {
        let t = k as f64 * step;
        if t > t_limit {
            break;
        }
        let p = o + dir * t;
        if p.y >= -grid.wall_height {
            if let Some((r, c)) = grid.cell_of(p.x, p.z) {
                if grid.is_blocked(r, c) {
                    return t * dz_cam;
                }
            }
        } else if dir.y <= 0.0 {
            // Above the wall tops and not descending: nothing ahead but sky.
            break;
        }
        k += 1;
    }
    // The floor is an infinite plane, so any descending ray that cleared
    // the walls lands on it; everything else is sky.
    if t_floor.is_finite() {
        t_floor * dz_cam
    } else {
        f64::INFINITY
    }
}

/// Renders the full raster by casting one ray through each pixel center.
/// Errors if the pose sits in a blocked or out-of-grid cell.
pub fn render_depth(
    scene: &Scene,
    pose: &Pose,
    cam: &CameraModel,
) -> Result<DepthMap, SceneError> {
    if !is_navigable(scene, pose.position) {
        return Err(SceneError::PoseBlocked);
    }
    let (w, h) = (cam.width, cam.height);
    let mut depths = Vec::with_capacity((w as usize) * (h as usize));
    for j in 0..h {
        for i in 0..w {
            let pixel = PixelPoint::new(f64::from(i) + 0.5, f64::from(j) + 0.5);
            depths.push(ray_depth(scene, pose, cam, pixel) as f32);
        }
    }
    Ok(DepthMap { width: w, height: h, depths })
}

#[derive(Serialize, Deserialize)]
struct SceneFile {
    cell_size: f64,
    cols: usize,
    rows: usize,
    wall_height: f64,
    occupancy: String,
    spawn: Pose,
    goals: Vec<Goal>,
    seed: u64,
}

/// Canonical single-line JSON for a scene.
pub fn scene_to_json(scene: &Scene) -> String {
    let file = SceneFile {
        cell_size: scene.grid.cell_size,
        cols: scene.grid.cols,
        rows: scene.grid.rows,
        wall_height: scene.grid.wall_height,
        occupancy: scene.grid.occupancy_string(),
        spawn: scene.spawn,
        goals: scene.goals.clone(),
        seed: scene.seed,
    };
    serde_json::to_string(&file).expect("scene serialization cannot fail")
}

pub fn scene_from_json(text: &str) -> Result<Scene, SceneError> {
    let file: SceneFile =
        serde_json::from_str(text).map_err(|e| SceneError::Schema(e.to_string()))?;
    if file.occupancy.len() != file.cols * file.rows {
        return Err(SceneError::BadOccupancy {
            cols: file.cols,
            rows: file.rows,
            got: file.occupancy.len(),
        });
    }
    let blocked: Vec<bool> = file
        .occupancy
        .chars()
        .map(|ch| match ch {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(SceneError::Schema(format!("bad occupancy char {other:?}"))),
        })
        .collect::<Result<_, _>>()?;
    let grid =
        OccupancyGrid::new(file.cols, file.rows, file.cell_size, file.wall_height, blocked)?;
    let scene = Scene { grid, spawn: file.spawn, goals: file.goals, seed: file.seed };
    if !is_navigable(&scene, scene.spawn.position) {
        return Err(SceneError::Schema("spawn is not navigable".into()));
    }
    for goal in &scene.goals {
        if !is_navigable(&scene, goal.position) {
            return Err(SceneError::Schema(format!("goal {:?} is not navigable", goal.label)));
        }
    }
    Ok(scene)
}

pub fn save_scene(scene: &Scene, path: &Path) -> Result<(), SceneError> {
    let mut f = std::fs::File::create(path)?;
    f.write_all(scene_to_json(scene).as_bytes())?;
    f.write_all(b"\n")?;
    Ok(())
}

pub fn load_scene(path: &Path) -> Result<Scene, SceneError> {
    let text = std::fs::read_to_string(path)?;
    scene_from_json(text.trim())
}
