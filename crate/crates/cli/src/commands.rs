use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use scatter_crypt::attacks::{cross_user_attack, random_key_attack, AttackReport, Victim};
use scatter_crypt::foldylax::{sample_state, scattering_matrix};
use scatter_crypt::keyring::UserKey;
use scatter_crypt::metrics::{ssim, SsimParams};
use scatter_crypt::protocol::{credential_hash, Encryptor, ExperimentConfig, PlaintextImage};
use scatter_crypt::samples::{band_limited_image, blob_image, scene_image};
use scatter_crypt::store::{
    cifar_to_images, load_json, read_image, save_json, save_matrix, write_image_csv, write_pgm,
    CiphertextBundle,
};
use scatter_crypt::Error;
use serde::Serialize;

use crate::manifest::RunManifest;
use crate::server::{Overrides, ServerDir};
use crate::{
    CifarArgs, CliError, CliResult, CrossAttackArgs, DecryptArgs, EncryptArgs, GenMediumArgs,
    RandomAttackArgs, RegisterArgs, ReportArgs, ServerArgs, StoreArgs, SynthArgs, SynthKind,
    DESK_CONFIG,
};

pub struct Context {
    pub threads: Option<usize>,
    pub started_unix: f64,
}

const KEYS_SEED: &str = "derived from the server seed";

impl Context {
    fn manifest(&self, command: &str, params: impl Serialize, output: &Path) -> RunManifest {
        let mut m = RunManifest::new(command, params, output);
        m.threads = self.threads;
        m.started_unix = self.started_unix;
        m
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |e| Error::io(path, e).into()
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(io_err(path))
}

/// PGM unless the extension asks for CSV.
fn write_image(img: &PlaintextImage, path: &Path) -> CliResult<()> {
    let bytes = match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => write_image_csv(img).into_bytes(),
        _ => write_pgm(img),
    };
    fs::write(path, bytes).map_err(io_err(path))
}

fn config_label(store: &ServerDir) -> Option<String> {
    Some(store.path("config.json").display().to_string())
}

fn open_server(args: &ServerArgs, overrides: Overrides) -> CliResult<(ServerDir, Encryptor)> {
    let store = ServerDir::new(&args.store.store);
    let t = Instant::now();
    let enc = store.open(&args.server_seed_file, overrides)?;
    info!(
        "loaded {} states from {} in {:.2?}",
        enc.states().len(),
        store.root().display(),
        t.elapsed()
    );
    Ok((store, enc))
}

fn issued_key<'a>(enc: &'a Encryptor, bundle: &CiphertextBundle) -> CliResult<&'a UserKey> {
    enc.keys()
        .get(&bundle.receipt.key_id)
        .ok_or_else(|| Error::UnknownReceipt(bundle.receipt.key_id.clone()).into())
}

pub fn gen_medium(ctx: &Context, args: GenMediumArgs) -> CliResult<()> {
    let text = match &args.config {
        Some(path) => fs::read_to_string(path).map_err(io_err(path))?,
        None => DESK_CONFIG.to_string(),
    };
    // a malformed user config is a validation problem, not a corrupt record
    let config = ExperimentConfig::from_json(&text).map_err(|e| match e {
        Error::Json(j) => Error::InvalidConfig(j.to_string()),
        e => e,
    })?;
    let scene = config.build_scene()?;
    let store = ServerDir::new(&args.out);
    store.create()?;
    if store.path("states.json").exists() {
        // matrices and keys of the previous medium no longer apply
        for entry in fs::read_dir(store.root()).map_err(io_err(store.root()))? {
            let path = entry.map_err(io_err(store.root()))?.path();
            let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
            if (name.starts_with("sm_") && name.ends_with(".scm")) || name == "keys.json" {
                warn!("removing stale {}", path.display());
                fs::remove_file(&path).map_err(io_err(&path))?;
            }
        }
    }
    let states: Vec<_> = (1..=config.protocol.states)
        .map(|l| sample_state(&scene.medium, l, args.seed_medium))
        .collect();
    store.save_config(&config)?;
    store.save_states(&states)?;
    println!(
        "sampled {} states of {} particles into {}",
        states.len(),
        scene.medium.particle_count(),
        store.root().display()
    );

    let mut m = ctx.manifest("gen-medium", &args, store.root());
    m.config = Some(match &args.config {
        Some(p) => p.display().to_string(),
        None => "built-in desk".into(),
    });
    m.seeds.medium = Some(args.seed_medium);
    m.written = vec![store.path("config.json"), store.path("states.json")];
    m.finish()?;
    Ok(())
}

pub fn compute_sm(ctx: &Context, args: StoreArgs) -> CliResult<()> {
    let store = ServerDir::new(&args.store);
    let config = store.config()?;
    let scene = config.build_scene()?;
    let states = store.states()?;
    let mut written = Vec::new();
    for state in &states {
        let t = Instant::now();
        let sm = scattering_matrix(state, &scene)?;
        let path = store.matrix_path(state.id);
        save_matrix(&sm.entries, &path)?;
        let (rows, cols) = sm.shape();
        info!("state {}: {rows}x{cols} in {:.2?}", state.id, t.elapsed());
        written.push(path);
    }
    println!(
        "wrote {} scattering matrices to {}",
        written.len(),
        store.root().display()
    );

    let mut m = ctx.manifest("compute-sm", &args, store.root());
    m.config = config_label(&store);
    m.seeds.medium = states.first().map(|s| s.seed);
    m.written = written;
    m.finish()?;
    Ok(())
}

pub fn register(ctx: &Context, args: RegisterArgs) -> CliResult<()> {
    let store = ServerDir::new(&args.store.store);
    let config = store.config()?;
    if args.user == 0 || args.user > config.protocol.users {
        return Err(Error::InvalidConfig(format!(
            "user {} outside 1..={}",
            args.user, config.protocol.users
        ))
        .into());
    }
    let mut users: BTreeMap<u32, String> = store.users()?;
    users.insert(args.user, credential_hash(&args.credential));
    store.save_users(&users)?;
    println!("registered user {}", args.user);

    let mut m = ctx.manifest("register", &args, store.root());
    m.config = config_label(&store);
    m.written = vec![store.path("users.json")];
    m.finish()?;
    Ok(())
}

pub fn encrypt(ctx: &Context, args: EncryptArgs) -> CliResult<()> {
    let overrides = Overrides {
        mode: None,
        epsilon_rel: args.epsilon_rel,
    };
    let (store, mut enc) = open_server(&args.server, overrides)?;
    let img = read_image(&args.image)?;
    let t = Instant::now();
    let (ciphertext, receipt) = enc.encrypt(&img, args.sender, args.recipient, args.block)?;
    info!("encrypted in {:.2?}", t.elapsed());
    let key_id = receipt.key_id.clone();
    save_json(
        &CiphertextBundle {
            ciphertext,
            receipt,
        },
        &args.out,
    )?;
    store.save_keys(enc.keys())?;
    println!(
        "wrote {} for user {} (key {key_id})",
        args.out.display(),
        args.recipient
    );

    let mut m = ctx.manifest("encrypt", &args, &args.out);
    m.config = config_label(&store);
    m.seeds.server_seed_file = Some(args.server.server_seed_file.clone());
    m.seeds.keys = Some(KEYS_SEED);
    m.mode = Some(enc.config().mode);
    m.written = vec![args.out.clone(), store.path("keys.json")];
    m.finish()?;
    Ok(())
}

pub fn decrypt(ctx: &Context, args: DecryptArgs) -> CliResult<()> {
    let overrides = Overrides {
        mode: args.mode.map(Into::into),
        epsilon_rel: None,
    };
    let (store, enc) = open_server(&args.server, overrides)?;
    let bundle: CiphertextBundle = load_json(&args.ciphertext)?;
    let img = enc.decrypt(&bundle.ciphertext, &bundle.receipt, &args.credential)?;
    write_image(&img, &args.out)?;
    println!("wrote {}", args.out.display());
    if let Some(reference) = &args.reference {
        let s = ssim(&img, &read_image(reference)?, &SsimParams::default())?;
        let verdict = if s >= args.min_ssim { "pass" } else { "below" };
        println!("ssim {s:.4} (threshold {:.2}: {verdict})", args.min_ssim);
    }

    let mut m = ctx.manifest("decrypt", &args, &args.out);
    m.config = config_label(&store);
    m.seeds.server_seed_file = Some(args.server.server_seed_file.clone());
    m.mode = Some(enc.config().mode);
    m.written = vec![args.out.clone()];
    m.finish()?;
    Ok(())
}

/// Writes reconstructions, references and the report into `out`.
fn write_attack(
    out: &Path,
    report: &mut AttackReport,
    references: &[(u32, &PlaintextImage, PlaintextImage)],
) -> CliResult<Vec<PathBuf>> {
    create_dir(out)?;
    let mut written = Vec::new();
    for (victim, plain, correct) in references {
        for (name, img) in [("plaintext", *plain), ("correct", correct)] {
            let path = out.join(format!("{name}_{victim}.pgm"));
            write_image(img, &path)?;
            written.push(path);
        }
    }
    for (trial, img) in report.trials.iter_mut().zip(&report.reconstructions) {
        let name = format!("trial_{:03}.pgm", trial.trial);
        let path = out.join(&name);
        write_image(img, &path)?;
        trial.image = Some(name);
        written.push(path);
    }
    let json = out.join("report.json");
    save_json(&*report, &json)?;
    let csv = out.join("report.csv");
    fs::write(&csv, report.to_csv()).map_err(io_err(&csv))?;
    written.extend([json, csv]);
    let s = report.summary;
    println!(
        "{}: {} trials, correct ssim {:.4}, best attack {:.4}, correct/attack {:.2}",
        report.scenario,
        report.trials.len(),
        s.correct_ssim,
        s.max_ssim,
        s.separation_ratio
    );
    Ok(written)
}

pub fn attack_random(ctx: &Context, args: RandomAttackArgs) -> CliResult<()> {
    let overrides = Overrides {
        mode: args.mode.map(Into::into),
        epsilon_rel: None,
    };
    let (store, enc) = open_server(&args.server, overrides)?;
    let bundle: CiphertextBundle = load_json(&args.ciphertext)?;
    let plaintext = read_image(&args.plaintext)?;
    let key = issued_key(&enc, &bundle)?;
    let victim = Victim {
        ciphertext: &bundle.ciphertext,
        plaintext: &plaintext,
        key,
    };
    let params = SsimParams::default();
    let mut report = random_key_attack(&enc, victim, args.trials, args.seed_attack, &params)?;
    let correct = enc.decrypt_with_key(&bundle.ciphertext, key)?;
    let written = write_attack(
        &args.out,
        &mut report,
        &[(key.recipient, &plaintext, correct)],
    )?;

    let mut m = ctx.manifest("attack random", &args, &args.out);
    m.config = config_label(&store);
    m.seeds.server_seed_file = Some(args.server.server_seed_file.clone());
    m.seeds.attack = Some(args.seed_attack);
    m.mode = Some(enc.config().mode);
    m.written = written;
    m.finish()?;
    Ok(())
}

pub fn attack_cross(ctx: &Context, args: CrossAttackArgs) -> CliResult<()> {
    if args.ciphertext.len() != args.plaintext.len() {
        return Err(CliError::Usage(format!(
            "{} ciphertexts but {} plaintexts",
            args.ciphertext.len(),
            args.plaintext.len()
        )));
    }
    let overrides = Overrides {
        mode: args.mode.map(Into::into),
        epsilon_rel: None,
    };
    let (store, enc) = open_server(&args.server, overrides)?;
    let bundles = args
        .ciphertext
        .iter()
        .map(|p| load_json::<CiphertextBundle>(p))
        .collect::<Result<Vec<_>, _>>()?;
    let plaintexts = args
        .plaintext
        .iter()
        .map(|p| read_image(p))
        .collect::<Result<Vec<_>, _>>()?;
    let keys = bundles
        .iter()
        .map(|b| issued_key(&enc, b))
        .collect::<CliResult<Vec<_>>>()?;
    let mut recipients: Vec<u32> = keys.iter().map(|k| k.recipient).collect();
    recipients.sort_unstable();
    recipients.dedup();
    if recipients.len() != keys.len() {
        return Err(
            Error::InvalidConfig("cross attack needs one ciphertext per recipient".into()).into(),
        );
    }
    let victims: Vec<Victim<'_>> = (0..bundles.len())
        .map(|i| Victim {
            ciphertext: &bundles[i].ciphertext,
            plaintext: &plaintexts[i],
            key: keys[i],
        })
        .collect();
    let mut report = cross_user_attack(&enc, &victims, &SsimParams::default())?;
    let references = victims
        .iter()
        .map(|v| {
            Ok((
                v.key.recipient,
                v.plaintext,
                enc.decrypt_with_key(v.ciphertext, v.key)?,
            ))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let written = write_attack(&args.out, &mut report, &references)?;

    let mut m = ctx.manifest("attack cross", &args, &args.out);
    m.config = config_label(&store);
    m.seeds.server_seed_file = Some(args.server.server_seed_file.clone());
    m.mode = Some(enc.config().mode);
    m.written = written;
    m.finish()?;
    Ok(())
}

#[derive(Serialize)]
struct ReportRow {
    attack: PathBuf,
    scenario: String,
    trials: usize,
    correct_ssim: f64,
    max_ssim: f64,
    separation_ratio: f64,
}

/// Grid of equally sized tiles separated by one white pixel.
fn tile(rows: &[Vec<PlaintextImage>]) -> CliResult<PlaintextImage> {
    let first = rows
        .iter()
        .flatten()
        .next()
        .ok_or_else(|| CliError::Usage("no images to tile".into()))?;
    let (w, h) = (first.width, first.height);
    if let Some(odd) = rows
        .iter()
        .flatten()
        .find(|i| (i.width, i.height) != (w, h))
    {
        return Err(Error::DimensionMismatch(format!(
            "tile {} is {}x{}, expected {w}x{h}",
            odd.source, odd.width, odd.height
        ))
        .into());
    }
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let width = cols * (w + 1) - 1;
    let height = rows.len() * (h + 1) - 1;
    let mut pixels = vec![1.0; width * height];
    for (r, row) in rows.iter().enumerate() {
        for (c, img) in row.iter().enumerate() {
            for y in 0..h {
                let dst = (r * (h + 1) + y) * width + c * (w + 1);
                pixels[dst..dst + w].copy_from_slice(&img.pixels[y * w..(y + 1) * w]);
            }
        }
    }
    Ok(PlaintextImage::new(width, height, pixels, "panel")?)
}

pub fn report(ctx: &Context, args: ReportArgs) -> CliResult<()> {
    if args.columns < 3 {
        return Err(CliError::Usage("--columns must be at least 3".into()));
    }
    create_dir(&args.out)?;
    let mut panel_rows = Vec::new();
    let mut rows = Vec::new();
    for dir in &args.attack {
        let report: AttackReport = load_json(&dir.join("report.json"))?;
        let mut victims: Vec<u32> = report.trials.iter().map(|t| t.victim).collect();
        victims.dedup();
        for v in victims {
            let mut row = vec![
                read_image(&dir.join(format!("plaintext_{v}.pgm")))?,
                read_image(&dir.join(format!("correct_{v}.pgm")))?,
            ];
            for t in report.trials.iter().filter(|t| t.victim == v) {
                if row.len() == args.columns {
                    break;
                }
                if let Some(name) = &t.image {
                    row.push(read_image(&dir.join(name))?);
                }
            }
            panel_rows.push(row);
        }
        let s = report.summary;
        rows.push(ReportRow {
            attack: dir.clone(),
            scenario: report.scenario.clone(),
            trials: report.trials.len(),
            correct_ssim: s.correct_ssim,
            max_ssim: s.max_ssim,
            separation_ratio: s.separation_ratio,
        });
    }
    let panel_path = args.out.join("panel.pgm");
    write_image(&tile(&panel_rows)?, &panel_path)?;
    let mut csv = String::from("attack,scenario,trials,correct_ssim,max_ssim,separation_ratio\n");
    for r in &rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.attack.display(),
            r.scenario,
            r.trials,
            r.correct_ssim,
            r.max_ssim,
            r.separation_ratio
        ));
    }
    let csv_path = args.out.join("summary.csv");
    fs::write(&csv_path, csv).map_err(io_err(&csv_path))?;
    let json_path = args.out.join("summary.json");
    save_json(&rows, &json_path)?;
    println!(
        "wrote panel of {} rows to {}",
        panel_rows.len(),
        panel_path.display()
    );

    let mut m = ctx.manifest("report", &args, &args.out);
    m.written = vec![panel_path, csv_path, json_path];
    m.finish()?;
    Ok(())
}

pub fn synth_image(ctx: &Context, args: SynthArgs) -> CliResult<()> {
    if args.size == 0 {
        return Err(CliError::Usage("--size must be positive".into()));
    }
    let n = args.size;
    let img = match args.kind {
        SynthKind::Scene => scene_image(n, n, args.seed),
        SynthKind::BandLimited => {
            if !(args.radius > 0.0 && args.radius <= 0.5) {
                return Err(CliError::Usage("--radius must lie in (0, 0.5]".into()));
            }
            band_limited_image(n, n, args.radius, args.seed)
        }
        SynthKind::Blob => blob_image(n, n, args.seed),
    };
    write_image(&img, &args.out)?;
    println!("wrote {}", args.out.display());

    let mut m = ctx.manifest("synth-image", &args, &args.out);
    m.seeds.image = Some(args.seed);
    m.written = vec![args.out.clone()];
    m.finish()?;
    Ok(())
}

pub fn cifar_to_pgm(ctx: &Context, args: CifarArgs) -> CliResult<()> {
    let bytes = fs::read(&args.batch).map_err(io_err(&args.batch))?;
    let images = cifar_to_images(&bytes, args.limit)?;
    create_dir(&args.out)?;
    let mut written = Vec::with_capacity(images.len());
    for (i, (label, img)) in images.iter().enumerate() {
        let path = args.out.join(format!("cifar_{i:04}_label{label}.pgm"));
        write_image(img, &path)?;
        written.push(path);
    }
    println!("wrote {} images to {}", written.len(), args.out.display());

    let mut m = ctx.manifest("cifar-to-pgm", &args, &args.out);
    m.written = written;
    m.finish()?;
    Ok(())
}
