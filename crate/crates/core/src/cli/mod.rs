//! Command-line front end.

mod output;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use output::{image_csv, ramp, write_atomic, Cell, Csv, Svg};

use crate::conjugate::{conjugate_field, ConjugateOptions, SlitSpec};
use crate::geometry::{
    build_voronoi, generate_annulus_mesh, read_annulus_spec, read_domain, read_mesh, validate_mesh, write_mesh,
    AnnulusShape, QualityTolerances, RoundAnnulus, Triangulation, VoronoiDiagram,
};
use crate::network::build_network;
use crate::packing::{markov_equality_check, markov_equality_check_flower, read_packing, Flower, MarkovReport};
use crate::point::Point;
use crate::riemann::{riemann_map, staircase_disk, ExhaustionSpec, RiemannApproximation};
use crate::solver::{solve_dirichlet, write_field, DirichletSpec, SolverOptions};
use crate::uniformize::{convergence_study, round_harmonic_order, AnnulusMap, PipelineOptions};
use crate::Error;

#[derive(Debug, Parser)]
#[command(name = "uniformizer", version, about = "Discrete conformal maps of annuli and punctured disks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Relative residual target of the linear solver.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    /// Seed for probe sampling.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Conjugate cut: an angle in radians or `v:<boundary vertex>`.
    #[arg(long, global = true, default_value = "0", allow_hyphen_values = true)]
    pub slit: SlitSpec,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a mesh, or validate one with `--validate`.
    Mesh(MeshArgs),
    /// Solve the Dirichlet problem (1 on the outer loop, 0 on the inner) on a mesh file.
    Solve(FileArgs),
    /// Solve and build the conjugate on a mesh file.
    Conjugate(FileArgs),
    /// Map annuli onto round annuli across refinement levels.
    Uniformize {
        #[command(subcommand)]
        target: UniformizeTarget,
    },
    /// Approximate the Riemann map of a punctured polygon.
    Riemann(RiemannArgs),
    /// Compare conductance and angle transition rows on a flower.
    PackingCheck(PackingArgs),
    /// Error tables under refinement.
    Convergence(StudyArgs),
}

#[derive(Debug, Subcommand)]
pub enum UniformizeTarget {
    Annulus(StudyArgs),
}

#[derive(Debug, Args)]
pub struct ShapeArgs {
    /// Round annulus with radii A < B.
    #[arg(long, num_args = 2, value_names = ["A", "B"], conflicts_with = "spec")]
    pub round: Option<Vec<f64>>,
    /// `annulus v1` file with axis-aligned loops.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Boundary spacing of the coarsest round mesh.
    #[arg(long, default_value_t = 0.25)]
    pub h0: f64,
}

#[derive(Debug, Args)]
pub struct MeshArgs {
    /// Read a `mesh v1` file and check V0-V2.
    #[arg(long, conflicts_with_all = ["round", "spec"])]
    pub validate: Option<PathBuf>,
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, default_value_t = 0)]
    pub level: u32,
    /// Output mesh file.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FileArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub shape: ShapeArgs,
    #[arg(long, default_value_t = 4)]
    pub levels: u32,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RiemannArgs {
    /// `domain v1` file with an axis-aligned lattice polygon.
    #[arg(long, conflicts_with = "disk")]
    pub domain: Option<PathBuf>,
    /// Use the lattice staircase of the disk of this radius about the origin.
    #[arg(long)]
    pub disk: Option<f64>,
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    pub puncture: Option<Point>,
    #[arg(long, default_value_t = 3)]
    pub levels: u32,
    /// Lattice pitch of the first level (overrides the domain file).
    #[arg(long)]
    pub pitch: Option<f64>,
    /// Half-width of the first hole; defaults to four pitches.
    #[arg(long)]
    pub half_width: Option<f64>,
    #[arg(long, default_value_t = 0.5)]
    pub factor: f64,
    #[arg(long)]
    pub probe_radius: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FlowerKind {
    /// Center 1, petals (1, 1, 1.2, 1, 0.8, 1).
    Default,
    /// Six unit petals.
    Regular,
    /// Center 1.1, petals (1, b, 1.2) twice, closed up.
    Perturbed,
}

#[derive(Debug, Args)]
pub struct PackingArgs {
    #[arg(long, value_enum, default_value_t = FlowerKind::Default, conflicts_with = "packing")]
    pub flower: FlowerKind,
    /// `pack v1` file; checks the flower of `--vertex`.
    #[arg(long, requires = "vertex")]
    pub packing: Option<PathBuf>,
    #[arg(long)]
    pub vertex: Option<usize>,
    /// Central-difference step relative to the center radius.
    #[arg(long, default_value_t = 1e-6)]
    pub step: f64,
    /// Fail when the deviation exceeds this.
    #[arg(long, default_value_t = 1e-3)]
    pub max_deviation: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_point(s: &str) -> Result<Point, String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected `x,y`, got `{s}`"))?;
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("bad coordinate `{t}`"));
    Ok(Point::new(num(x)?, num(y)?))
}

/// Caps the rayon pool from `UNIFORMIZER_THREADS`.
pub fn configure_threads() -> Result<(), Error> {
    if let Ok(v) = std::env::var("UNIFORMIZER_THREADS") {
        let n: usize = v.parse().ok().filter(|&n| n > 0).ok_or_else(|| {
            Error::Input(format!("UNIFORMIZER_THREADS must be a positive integer, got `{v}`"))
        })?;
        // a pool that already exists keeps its size
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

/// Parses the process arguments, runs, and returns the exit status.
pub fn main_with_args(args: impl IntoIterator<Item = String>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match configure_threads().and_then(|_| run(&cli)) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("uniformizer: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), Error> {
    let opts = PipelineOptions {
        solver: SolverOptions { tol: cli.tol, ..Default::default() },
        conjugate: ConjugateOptions { slit: cli.slit, ..Default::default() },
        boundary: DirichletSpec::default(),
    };
    match &cli.command {
        Command::Mesh(a) => mesh(a),
        Command::Solve(a) => solve(a, &opts),
        Command::Conjugate(a) => conjugate(a, &opts),
        Command::Uniformize { target: UniformizeTarget::Annulus(a) } => uniformize(a, &opts, cli.seed),
        Command::Riemann(a) => riemann(a, cli.tol),
        Command::PackingCheck(a) => packing_check(a),
        Command::Convergence(a) => convergence(a, &opts, cli.seed),
    }
}

fn open(path: &Path) -> Result<BufReader<fs::File>, Error> {
    fs::File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::Input(format!("cannot open {}: {e}", path.display())))
}

fn out_dir(dir: &Path) -> Result<&Path, Error> {
    fs::create_dir_all(dir)?;
    Ok(dir)
}

fn save(dir: &Path, name: &str, text: &str) -> Result<(), Error> {
    write_atomic(&dir.join(name), text.as_bytes())?;
    Ok(())
}

fn shape(a: &ShapeArgs) -> Result<AnnulusShape, Error> {
    match (&a.round, &a.spec) {
        (Some(r), None) => Ok(AnnulusShape::Round(RoundAnnulus::new(r[0], r[1], a.h0)?)),
        (None, Some(path)) => {
            let (annulus, h0) = read_annulus_spec(open(path)?)?;
            Ok(AnnulusShape::Lattice { annulus, h0 })
        }
        _ => Err(Error::Input("give either --round A B or --spec FILE".into())),
    }
}

/// V0 is enforced when the mesh is built; V1 and V2 are checked here.
pub fn check_conditions(mesh: &Arc<Triangulation>) -> Result<(), Error> {
    let tol = QualityTolerances::default();
    let report = validate_mesh(mesh);
    if !report.v1_ok {
        let vertex = (0..mesh.num_vertices()).max_by_key(|&i| mesh.neighbors(i).count()).unwrap();
        let neighbors = mesh.neighbors(vertex).count();
        return Err(Error::TooManyNeighbors { vertex, neighbors, limit: tol.max_neighbors });
    }
    if !report.v2_ok {
        let v = build_voronoi(mesh.clone())?;
        let (edge, offset) = (0..mesh.edges().len())
            .filter(|&e| !mesh.edge(e).is_boundary())
            .map(|e| (e, v.v2_offset(e)))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap();
        return Err(Error::MidpointOffset { edge, offset });
    }
    Ok(())
}

fn mesh(a: &MeshArgs) -> Result<(), Error> {
    if let Some(path) = &a.validate {
        let mesh = Arc::new(read_mesh(open(path)?)?);
        let r = validate_mesh(&mesh);
        println!(
            "vertices {} triangles {} rho {:.6e} tau {:.6} max-neighbors {} v2-offset {:.3e}",
            mesh.num_vertices(),
            mesh.num_triangles(),
            mesh.mesh_size(),
            r.tau,
            r.max_neighbors,
            r.v2_max_offset
        );
        check_conditions(&mesh)?;
        println!("V0 V1 V2 ok");
        return Ok(());
    }
    let out = a.out.as_ref().ok_or_else(|| Error::Input("--out FILE is required when generating".into()))?;
    let mesh = generate_annulus_mesh(&shape(&a.shape)?, a.level)?;
    let mut buf = Vec::new();
    write_mesh(&mesh, &mut buf)?;
    write_atomic(out, &buf)?;
    println!("wrote {} ({} vertices, {} triangles)", out.display(), mesh.num_vertices(), mesh.num_triangles());
    Ok(())
}

fn potential_csv(mesh: &Triangulation, g: &[f64]) -> String {
    let mut csv = Csv::new(&["vertex", "x", "y", "label", "g"]);
    for (i, (p, v)) in mesh.vertices().iter().zip(g).enumerate() {
        csv.row(&[i.into(), p.x.into(), p.y.into(), Cell::Int(mesh.label(i).code().into()), (*v).into()]);
    }
    csv.into_string()
}

fn solve(a: &FileArgs, opts: &PipelineOptions) -> Result<(), Error> {
    let dir = out_dir(&a.out)?;
    let v = build_voronoi(Arc::new(read_mesh(open(&a.mesh)?)?))?;
    let net = build_network(&v)?;
    let (g, report) = solve_dirichlet(&net, &opts.boundary, &opts.solver)?;
    save(dir, "potential.csv", &potential_csv(v.mesh(), g.values()))?;
    let mut buf = Vec::new();
    write_field(g.values(), &mut buf)?;
    write_atomic(&dir.join("potential.field"), &buf)?;
    buf.clear();
    net.write_dump(&mut buf)?;
    write_atomic(&dir.join("network.net"), &buf)?;
    save(dir, "potential.svg", &field_svg(v.mesh(), g.values()))?;
    println!("solved {} unknowns in {} iterations, residual {:.3e}", v.mesh().num_vertices(), report.iterations, report.residual);
    Ok(())
}

fn conjugate(a: &FileArgs, opts: &PipelineOptions) -> Result<(), Error> {
    let dir = out_dir(&a.out)?;
    let v = Arc::new(build_voronoi(Arc::new(read_mesh(open(&a.mesh)?)?))?);
    let net = build_network(&v)?;
    let (g, _) = solve_dirichlet(&net, &opts.boundary, &opts.solver)?;
    let conj = conjugate_field(&net, &v, &g, &opts.conjugate)?;
    let mut csv = Csv::new(&["w", "x", "y", "value"]);
    for (w, (p, c)) in v.points().iter().zip(conj.values()).enumerate() {
        csv.row(&[w.into(), p.x.into(), p.y.into(), (*c).into()]);
    }
    save(dir, "conjugate.csv", &csv.into_string())?;
    let mut buf = Vec::new();
    conj.write_dump(&mut buf)?;
    write_atomic(&dir.join("conjugate.conj"), &buf)?;
    save(dir, "potential.csv", &potential_csv(v.mesh(), g.values()))?;
    println!("period {:.16e} (slit of {} edges)", conj.period(), conj.slit().len());
    Ok(())
}

fn field_svg(mesh: &Triangulation, g: &[f64]) -> String {
    let (lo, hi) = g.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    let span = (hi - lo).max(1e-300);
    let mut svg = Svg::new(mesh.vertices().iter().copied());
    for (t, tri) in mesh.triangles().iter().enumerate() {
        let mean = tri.iter().map(|&i| g[i]).sum::<f64>() / 3.0;
        svg.polygon(&mesh.corners(t), &ramp((mean - lo) / span));
    }
    for e in mesh.edges() {
        svg.line(mesh.vertex(e.v[0]), mesh.vertex(e.v[1]), "#555555");
    }
    svg.finish()
}

/// Image of the Voronoi skeleton with the two target circles.
fn map_svg(map: &AnnulusMap) -> String {
    let v = map.voronoi();
    let images: Vec<Point> = (0..v.num_points()).map(|w| Point::from_complex(map.vertex_image(w))).collect();
    let r2 = map.r2();
    let mut svg = Svg::new([Point::new(-r2, -r2), Point::new(r2, r2)]);
    for d in v.duals() {
        svg.line(images[d.from], images[d.to], "#1f77b4");
    }
    svg.circle(Point::default(), 1.0, "#d62728");
    svg.circle(Point::default(), r2, "#d62728");
    svg.finish()
}

fn voronoi_images(v: &VoronoiDiagram, f: impl Fn(usize) -> num_complex::Complex64) -> String {
    image_csv(v.points(), (0..v.num_points()).map(f))
}

fn uniformize(a: &StudyArgs, opts: &PipelineOptions, seed: u64) -> Result<(), Error> {
    let dir = out_dir(&a.out)?;
    let study = convergence_study(&shape(&a.shape)?, a.levels, opts, seed)?;
    save(dir, "table.csv", &study.table.to_csv())?;
    for (l, s) in study.levels.iter().enumerate() {
        save(dir, &format!("map_level{l}.csv"), &voronoi_images(&s.voronoi, |w| s.map.vertex_image(w)))?;
        save(dir, &format!("map_level{l}.svg"), &map_svg(&s.map))?;
    }
    let coarse = &study.levels[0];
    save(dir, "potential_level0.svg", &field_svg(coarse.mesh(), coarse.map.g().values()))?;
    print_table(&study.table.rows);
    Ok(())
}

fn print_table(rows: &[crate::uniformize::ConvergenceRow]) {
    println!("level rho lambda potential_error period period_error circularity_error map_error");
    for r in rows {
        println!(
            "{} {:.6e} {:.6e} {:.6e} {:.10} {:.6e} {:.6e} {:.6e}",
            r.level, r.rho, r.lambda, r.potential_error, r.period, r.period_error, r.circularity_error, r.map_error
        );
    }
}

fn convergence(a: &StudyArgs, opts: &PipelineOptions, seed: u64) -> Result<(), Error> {
    let dir = out_dir(&a.out)?;
    let shape = shape(&a.shape)?;
    let study = convergence_study(&shape, a.levels, opts, seed)?;
    save(dir, "table.csv", &study.table.to_csv())?;
    let mut csv = Csv::new(&["level", "successive_difference"]);
    for (l, d) in study.table.successive.iter().enumerate() {
        csv.row(&[l.into(), (*d).into()]);
    }
    save(dir, "successive.csv", &csv.into_string())?;
    print_table(&study.table.rows);
    if let AnnulusShape::Round(r) = &shape {
        let h = round_harmonic_order(r, a.levels, &opts.solver)?;
        let mut csv = Csv::new(&["level", "lambda", "rho", "max_laplacian"]);
        for (l, ((lam, rho), res)) in h.lambda.iter().zip(&h.rho).zip(&h.order.residuals).enumerate() {
            csv.row(&[l.into(), (*lam).into(), (*rho).into(), (*res).into()]);
        }
        save(dir, "harmonic.csv", &csv.into_string())?;
        println!("harmonic order vs lambda {:.3}, vs rho {:.3}", h.order.alpha_lambda, h.order.alpha_rho);
    }
    Ok(())
}

fn riemann(a: &RiemannArgs, tol: f64) -> Result<(), Error> {
    let dir = out_dir(&a.out)?;
    let (domain, file_pitch, default_puncture) = match (&a.domain, a.disk) {
        (Some(path), None) => {
            let (pts, pitch) = read_domain(open(path)?)?;
            (pts, pitch, None)
        }
        (None, Some(radius)) => {
            let pitch = a.pitch.unwrap_or(radius / 16.0);
            (staircase_disk(radius, pitch)?, Some(pitch), Some(Point::default()))
        }
        _ => return Err(Error::Input("give either --domain FILE or --disk RADIUS".into())),
    };
    let pitch = a.pitch.or(file_pitch).ok_or_else(|| Error::Input("no lattice pitch: pass --pitch".into()))?;
    let puncture = a.puncture.or(default_puncture).ok_or_else(|| Error::Input("--puncture x,y is required".into()))?;
    let mut spec = ExhaustionSpec::new(domain, puncture, pitch);
    spec.levels = a.levels;
    spec.half_width = a.half_width.unwrap_or(4.0 * pitch);
    spec.factor = a.factor;
    spec.probe_radius = a.probe_radius;
    spec.solver.tol = tol;
    let r = riemann_map(&spec)?;
    write_riemann(dir, &r)?;
    println!("level period inner_radius");
    for (n, l) in r.levels.iter().enumerate() {
        println!("{} {:.10} {:.6e}", n + 1, l.period, l.inner_radius);
    }
    for (n, c) in r.cauchy.iter().enumerate() {
        println!("cauchy {}-{} {:.6e}", n + 1, n + 2, c);
    }
    Ok(())
}

fn write_riemann(dir: &Path, r: &RiemannApproximation) -> Result<(), Error> {
    let mut periods = Csv::new(&["level", "period", "inner_radius"]);
    for (n, l) in r.levels.iter().enumerate() {
        periods.row(&[(n + 1).into(), l.period.into(), l.inner_radius.into()]);
        let v = &l.solution.voronoi;
        save(dir, &format!("riemann_level{}.csv", n + 1), &voronoi_images(v, |w| l.map.vertex_image(w)))?;
    }
    save(dir, "periods.csv", &periods.into_string())?;
    let mut cauchy = Csv::new(&["level", "cauchy"]);
    for (n, c) in r.cauchy.iter().enumerate() {
        cauchy.row(&[(n + 1).into(), (*c).into()]);
    }
    save(dir, "cauchy.csv", &cauchy.into_string())?;

    let mut svg = Svg::new([Point::new(-1.0, -1.0), Point::new(1.0, 1.0)]);
    let finest = r.levels.last().unwrap();
    let v = &finest.solution.voronoi;
    let images: Vec<Point> = (0..v.num_points()).map(|w| Point::from_complex(finest.map.vertex_image(w))).collect();
    for d in v.duals() {
        svg.line(images[d.from], images[d.to], "#bbbbbb");
    }
    for (n, l) in r.levels.iter().enumerate() {
        let ring: Vec<Point> = r.probes.iter().filter_map(|&p| l.map.eval(p).ok().map(Point::from_complex)).collect();
        for k in 0..ring.len() {
            svg.line(ring[k], ring[(k + 1) % ring.len()], output::PALETTE[n % output::PALETTE.len()]);
        }
    }
    svg.circle(Point::default(), 1.0, "#000000");
    save(dir, "riemann.svg", &svg.finish())
}

fn packing_check(a: &PackingArgs) -> Result<(), Error> {
    let (label, report): (String, MarkovReport) = match (&a.packing, a.vertex) {
        (Some(path), Some(v)) => {
            let p = read_packing(open(path)?)?;
            (format!("vertex {v} of {}", path.display()), markov_equality_check(&p, v, a.step)?)
        }
        _ => {
            let f = match a.flower {
                FlowerKind::Default => Flower::default_flower(),
                FlowerKind::Regular => Flower::regular(6),
                FlowerKind::Perturbed => Flower::perturbed(),
            };
            (format!("{:?} flower", a.flower).to_lowercase(), markov_equality_check_flower(&f, a.step)?)
        }
    };
    println!("markov deviation {:.6e} ({label}, h = {:e})", report.deviation, a.step);
    if let Some(dir) = &a.out {
        let dir = out_dir(dir)?;
        let mut csv = Csv::new(&["petal", "conductance_row", "angle_row"]);
        for (j, (c, d)) in report.conductance_rows.iter().zip(&report.angle_rows).enumerate() {
            csv.row(&[j.into(), (*c).into(), (*d).into()]);
        }
        save(dir, "markov.csv", &csv.into_string())?;
    }
    if report.deviation > a.max_deviation {
        return Err(Error::CheckFailed { what: "markov deviation", value: report.deviation, limit: a.max_deviation });
    }
    Ok(())
}
