//! The five stages of a round, shared by the binary and the tests.
//!
//! All roles normally run in one process (`e2e`); the staged subcommands
//! communicate through the artifact directory instead, so each role can run
//! as its own process against a shared folder. The publisher simulates the
//! pairwise mask exchange by writing every trainer's mask row at setup;
//! a trainer reads only its own row and its ring predecessor's.
//!
//! Everything derives from the config snapshot's master seed, so two runs
//! of the same snapshot produce byte-identical keys, bundles, submissions,
//! ledger, and global model. Wall-clock stamps live under `timings/` to
//! keep them out of the deterministic artifacts.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use zkfl::aggregation::{
    exchange_masks, fold_ciphertexts, global_model_from_sums, load_mask_row, save_mask_row,
    submit, vrf_sum_prf, AggregationScope, GlobalModel, RoundContext, Submission,
};
use zkfl::algebra::Scalar;
use zkfl::encode::ByteWriter;
use zkfl::groth16::{setup, PreparedProver, Proof, ProvingKey, VerificationKey};
use zkfl::ledger::{cipher_sums, recorded_submissions, Ledger, Payload};
use zkfl::paillier::{keygen_profile, PaillierPublicKey, PaillierSecretKey};
use zkfl::piecechain::{
    diagnose_chain, load_bundles, prove_pieces, save_bundles, PieceBundle, T0Mode, TList,
};
use zkfl::quantize::{PieceProgram, TaylorApprox};
use zkfl::r1cs::{synthesize_piece, ConstraintSystem, SynthesisMap};
use zkfl::trainer::{
    build_program, classification_accuracy, decode_params, train_local, LocalModel, ProgramMeta,
};

use crate::config::RunConfig;
use crate::metrics::{MetricsReport, StageTiming};

/// Single aggregation round id; the simulator runs one round per directory.
const ROUND_ID: u64 = 1;
const CODE_ID: &str = "zkfl-round";

// ---------------------------------------------------------------------------
// Artifact layout
// ---------------------------------------------------------------------------

/// Canonical file layout under one output directory.
#[derive(Clone, Debug)]
pub struct Artifacts {
    root: PathBuf,
}

impl Artifacts {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Artifacts { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn config(&self) -> PathBuf {
        self.root.join("config.toml")
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("circuit.json")
    }

    pub fn proving_key(&self) -> PathBuf {
        self.root.join("pk.bin")
    }

    pub fn verification_key(&self) -> PathBuf {
        self.root.join("vk.bin")
    }

    pub fn paillier_public(&self) -> PathBuf {
        self.root.join("paillier.pub.bin")
    }

    pub fn paillier_secret(&self) -> PathBuf {
        self.root.join("paillier.sk.bin")
    }

    pub fn mask_row(&self, trainer: u32) -> PathBuf {
        self.root.join("masks").join(format!("trainer-{trainer}.bin"))
    }

    pub fn trainer_dir(&self, trainer: u32) -> PathBuf {
        self.root.join(format!("trainer-{trainer}"))
    }

    pub fn bundles(&self, trainer: u32) -> PathBuf {
        self.trainer_dir(trainer).join("bundles.bin")
    }

    pub fn submission(&self, trainer: u32) -> PathBuf {
        self.trainer_dir(trainer).join("submission.bin")
    }

    pub fn local_model(&self, trainer: u32) -> PathBuf {
        self.trainer_dir(trainer).join("model.json")
    }

    pub fn timing(&self, stage: &str) -> PathBuf {
        self.root.join("timings").join(format!("{stage}.json"))
    }

    pub fn ledger(&self) -> PathBuf {
        self.root.join("ledger.bin")
    }

    pub fn global_model(&self) -> PathBuf {
        self.root.join("global_model.json")
    }

    pub fn metrics(&self) -> PathBuf {
        self.root.join("metrics.json")
    }

    /// Loads the config snapshot, or explains that setup has not run here.
    pub fn load_config(&self) -> Result<RunConfig> {
        let path = self.config();
        if !path.exists() {
            bail!(
                "no setup artifacts in {}: run `zkfl setup --out {}` first",
                self.root.display(),
                self.root.display()
            );
        }
        let config = RunConfig::load(&path)?;
        if config.seed.is_none() {
            bail!("config snapshot {} is missing its resolved seed", path.display());
        }
        Ok(config)
    }
}

/// Deterministic manifest of the circuit the round proves against.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CircuitManifest {
    pub task: String,
    pub rat: u32,
    /// Order of the selected sigmoid replacement; absent for identity tasks.
    pub sigmoid_order: Option<u32>,
    pub constraints: u32,
    pub wires: u32,
    pub statement_len: u32,
    pub pieces_per_trainer: u32,
    pub circuit_hash: String,
}

impl CircuitManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self).context("serializing manifest")?;
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading manifest {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

// ---------------------------------------------------------------------------
// Deterministic derivation
// ---------------------------------------------------------------------------

/// One RNG per (purpose, id), all fanned out from the master seed so stages
/// can rerun independently without sharing stream state.
fn derive_rng(master: u64, label: &str, id: u64) -> ChaCha20Rng {
    let mut h = Sha256::new();
    h.update(b"zkfl-seed");
    h.update(master.to_le_bytes());
    h.update((label.len() as u64).to_le_bytes());
    h.update(label.as_bytes());
    h.update(id.to_le_bytes());
    ChaCha20Rng::from_seed(h.finalize().into())
}

fn master_seed(config: &RunConfig) -> Result<u64> {
    config.seed.ok_or_else(|| anyhow!("config has no resolved seed"))
}

/// Everything reconstructible from the config alone: task, approximation,
/// piece program, constraint system, and wire map.
pub struct Round {
    pub config: RunConfig,
    pub task: zkfl::trainer::TrainingTask,
    pub approx: Option<TaylorApprox>,
    pub program: PieceProgram,
    pub meta: ProgramMeta,
    pub cs: ConstraintSystem,
    pub map: SynthesisMap,
}

impl Round {
    pub fn build(config: &RunConfig) -> Result<Round> {
        let task = config.training_task()?;
        let approx = task.select_sigmoid()?;
        let (program, meta) = build_program(&task, approx.as_ref())?;
        let (cs, map) = synthesize_piece(&program)?;
        Ok(Round {
            config: config.clone(),
            task,
            approx,
            program,
            meta,
            cs,
            map,
        })
    }

    /// Declared bound on any aggregated value: the trainer-side divergence
    /// guard rejects anything at or past 10^{rat+4}, so honest submissions
    /// stay strictly inside it.
    pub fn max_abs(&self) -> u128 {
        10u128.pow(self.task.rat + 4)
    }

    pub fn round_context(&self, pk: &PaillierPublicKey) -> Result<RoundContext> {
        Ok(RoundContext::new(
            ROUND_ID,
            self.config.trainers,
            AggregationScope::OutputHalf,
            self.cs.num_statement,
            self.max_abs(),
            self.task.rat,
            pk,
        )?)
    }

    /// Initial model parameters every trainer starts from (zeros).
    pub fn initial_params(&self) -> Vec<i128> {
        vec![0; self.task.model.num_params()]
    }
}

/// Sizes the proving worker pool when the config asks for a specific count.
/// Without the `parallel` feature there is no pool and the setting is moot.
pub fn init_threads(config: &RunConfig) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = config.threads {
        // Ignore the error from a second initialization: e2e calls every
        // stage in one process and the pool can only be built once.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n as usize)
            .build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = config;
    Ok(())
}

// ---------------------------------------------------------------------------
// setup
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SetupSummary {
    pub manifest: CircuitManifest,
    pub seed: u64,
    pub seconds: f64,
}

/// Publisher stage one: resolve the config, build the circuit, sample the
/// CRS and Paillier keys, and simulate the mask exchange. Everything lands
/// under `out` and is reproducible from the snapshot alone.
pub fn cmd_setup(config: &RunConfig, out: &Path) -> Result<SetupSummary> {
    let mut config = config.clone();
    config.validate()?;
    if config.seed.is_none() {
        config.seed = Some(rand::rngs::OsRng.next_u64());
    }
    let seed = master_seed(&config)?;
    init_threads(&config)?;

    let art = Artifacts::new(out);
    fs::create_dir_all(art.root()).with_context(|| format!("creating {}", out.display()))?;
    fs::create_dir_all(art.root().join("masks"))?;
    fs::create_dir_all(art.root().join("timings"))?;

    let started = Instant::now();
    let round = Round::build(&config)?;

    let (pk, vk, _trapdoor) = setup(
        &round.cs.to_qap(),
        round.cs.circuit_hash(),
        derive_rng(seed, "groth16-setup", 0),
    )?;
    let (paillier_pk, paillier_sk) =
        keygen_profile(config.key_profile()?, derive_rng(seed, "paillier-keygen", 0))?;

    let ctx = round.round_context(&paillier_pk)?;
    let masks = exchange_masks(&ctx, &paillier_pk, derive_rng(seed, "mask-exchange", 0));
    for trainer in 1..=config.trainers {
        save_mask_row(&art.mask_row(trainer), masks.row(trainer as usize))?;
    }

    let manifest = CircuitManifest {
        task: config.task.clone(),
        rat: round.task.rat,
        sigmoid_order: round.approx.as_ref().map(|a| a.order),
        constraints: round.cs.constraints.len() as u32,
        wires: round.cs.num_wires as u32,
        statement_len: round.cs.num_statement as u32,
        pieces_per_trainer: round.task.q,
        circuit_hash: hex::encode(round.cs.circuit_hash()),
    };

    config.save(&art.config())?;
    manifest.save(&art.manifest())?;
    pk.save(&art.proving_key())?;
    vk.save(&art.verification_key())?;
    paillier_pk.save(&art.paillier_public())?;
    paillier_sk.save(&art.paillier_secret())?;

    let seconds = started.elapsed().as_secs_f64();
    StageTiming { seconds, items: 1 }.save(&art.timing("setup"))?;

    println!(
        "setup: {} task, {} constraints, statement length {}, {} pieces per trainer",
        manifest.task, manifest.constraints, manifest.statement_len, manifest.pieces_per_trainer
    );
    println!(
        "setup: wrote keys and {} mask rows to {} in {seconds:.2}s (seed {seed})",
        config.trainers,
        out.display()
    );
    Ok(SetupSummary { manifest, seed, seconds })
}

// ---------------------------------------------------------------------------
// train-prove
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TrainProveSummary {
    pub trainer: u32,
    pub pieces: u32,
    pub seconds: f64,
    pub accuracy: Option<f64>,
}

/// Replays the noise chain exactly as the prover derives it: the chain is
/// drawn from the RNG first, one `next` per piece, before any per-piece
/// seed. The trainer needs the final list for its aggregation linkage proof.
fn final_noise_list(t0: &TList, pieces: usize, mut rng: impl RngCore) -> TList {
    let mut t = t0.clone();
    for _ in 0..pieces {
        t = t.next(&mut rng);
    }
    t
}

/// Trainer stage: train locally over this trainer's slice, prove every
/// piece, and write bundles, local model, and the masked submission.
pub fn cmd_train_prove(out: &Path, trainer: u32) -> Result<TrainProveSummary> {
    let art = Artifacts::new(out);
    let config = art.load_config()?;
    let seed = master_seed(&config)?;
    init_threads(&config)?;
    if trainer == 0 || trainer > config.trainers {
        bail!("trainer id {trainer} out of range 1..={}", config.trainers);
    }

    let round = Round::build(&config)?;
    let pk = ProvingKey::load(&art.proving_key())?;
    let vk = VerificationKey::load(&art.verification_key())?;
    let paillier_pk = PaillierPublicKey::load(&art.paillier_public())?;
    let prover = PreparedProver::new(&pk, &round.cs)?;

    let started = Instant::now();
    let train = config.training_slice(trainer)?;
    let holdout = config.holdout()?;
    let (model, pieces) = train_local(
        &round.task,
        &round.program,
        &round.meta,
        &train,
        &holdout,
        &round.initial_params(),
    )?;

    let assignments: Vec<Vec<Scalar>> = pieces
        .iter()
        .map(|p| Ok(round.map.assign(&p.trace)?))
        .collect::<Result<_>>()?;
    let final_statement = round
        .map
        .statement_values(&pieces.last().expect("split yields at least one piece").trace);

    // Piece 1's input noise copies T₀'s output half; zeroing it publishes
    // the first inputs in the clear so anyone can check them against the
    // agreed initial model.
    let t0 = TList::initial(
        round.cs.num_statement,
        T0Mode::PublicFirstInputs,
        derive_rng(seed, "t0", trainer as u64),
    )?;
    let prove_rng = derive_rng(seed, "prove", trainer as u64);
    let final_t = final_noise_list(&t0, pieces.len(), prove_rng.clone());
    let bundles = prove_pieces(&prover, &vk, &assignments, &t0, prove_rng)?;

    // The replayed chain must describe exactly what was proven.
    let last = bundles.last().expect("prove_pieces rejects empty chains");
    for (j, (phi, noise)) in final_statement.iter().zip(&final_t.0).enumerate() {
        if last.phi_prime[j] != Scalar::from_i128(*phi) + noise {
            bail!("internal error: replayed noise list diverged at slot {j}");
        }
    }

    fs::create_dir_all(art.trainer_dir(trainer))?;
    save_bundles(&art.bundles(trainer), &bundles)?;
    fs::write(
        art.local_model(trainer),
        serde_json::to_string_pretty(&model).context("serializing local model")?,
    )?;

    let ctx = round.round_context(&paillier_pk)?;
    let prev = if trainer == 1 { config.trainers } else { trainer - 1 };
    let own_masks = load_mask_row(&art.mask_row(trainer))?;
    let prev_masks = load_mask_row(&art.mask_row(prev))?;
    let submission = submit(
        &ctx,
        &paillier_pk,
        trainer,
        &final_statement,
        &final_t,
        &own_masks,
        &prev_masks,
        derive_rng(seed, "submit", trainer as u64),
    )?;
    submission.save(&art.submission(trainer))?;

    let seconds = started.elapsed().as_secs_f64();
    StageTiming { seconds, items: bundles.len() as u32 }
        .save(&art.timing(&format!("trainer-{trainer}")))?;

    println!(
        "train-prove: trainer {trainer} proved {} pieces in {seconds:.2}s ({:.3}s/proof){}",
        bundles.len(),
        seconds / bundles.len() as f64,
        match model.accuracy {
            Some(a) => format!(", holdout accuracy {a:.3}"),
            None => String::new(),
        }
    );
    Ok(TrainProveSummary {
        trainer,
        pieces: bundles.len() as u32,
        seconds,
        accuracy: model.accuracy,
    })
}

// ---------------------------------------------------------------------------
// verify-aggregate
// ---------------------------------------------------------------------------

/// Per-trainer verification verdict; failures carry the failing piece.
#[derive(Clone, Debug)]
pub struct TrainerVerdict {
    pub trainer: u32,
    pub detail: String,
    pub ok: bool,
}

#[derive(Clone, Debug)]
pub struct VerifySummary {
    pub verdicts: Vec<TrainerVerdict>,
    pub global: GlobalModel,
    pub metrics: MetricsReport,
}

struct TrainerArtifacts {
    bundles: Vec<PieceBundle>,
    submission: Submission,
    model: LocalModel,
}

fn load_trainer(
    art: &Artifacts,
    trainer: u32,
    vk: &VerificationKey,
    paillier_pk: &PaillierPublicKey,
) -> Result<TrainerArtifacts> {
    let bundles = load_bundles(&art.bundles(trainer), vk)?;
    let submission = Submission::load(&art.submission(trainer), paillier_pk)?;
    let text = fs::read_to_string(art.local_model(trainer))
        .with_context(|| format!("reading {}", art.local_model(trainer).display()))?;
    let model: LocalModel = serde_json::from_str(&text)?;
    Ok(TrainerArtifacts { bundles, submission, model })
}

/// Checks one trainer's chain: bundle count, first-piece input binding
/// against the agreed initial model, every piece proof plus Σ-proofs, and
/// the submission's shape. Returns the failure description, if any.
fn check_trainer(
    round: &Round,
    vk: &VerificationKey,
    trainer: u32,
    arts: &TrainerArtifacts,
) -> Result<Option<String>> {
    let want = round.task.q as usize;
    if arts.bundles.len() != want {
        return Ok(Some(format!(
            "bundle count {} does not match the task's {want} pieces",
            arts.bundles.len()
        )));
    }
    let l = round.cs.num_statement;
    let p0 = round.initial_params();
    let first = &arts.bundles[0];
    for (j, expected) in p0.iter().enumerate() {
        if first.phi_prime[j] != Scalar::from_i128(*expected) {
            return Ok(Some(format!(
                "piece 1 input slot {j} does not match the agreed initial model"
            )));
        }
    }
    debug_assert_eq!(p0.len(), l / 2);
    if let Some((piece, reason)) = diagnose_chain(&arts.bundles, vk)? {
        return Ok(Some(format!("piece {piece}: {reason}")));
    }
    if arts.submission.trainer != trainer {
        return Ok(Some(format!(
            "submission claims trainer id {}",
            arts.submission.trainer
        )));
    }
    if arts.model.rat != round.task.rat || arts.model.params.len() != p0.len() {
        return Ok(Some("published local model has the wrong shape".into()));
    }
    Ok(None)
}

/// Publisher stage two: verify every trainer's chain, replay the round on
/// the contract ledger, decrypt and publish the aggregate, and write the
/// global model plus metrics. Any failing trainer is named and aggregation
/// refuses; honest trainers' verdicts are still reported.
pub fn cmd_verify_aggregate(out: &Path) -> Result<VerifySummary> {
    let art = Artifacts::new(out);
    let config = art.load_config()?;
    init_threads(&config)?;
    let round = Round::build(&config)?;
    let manifest = CircuitManifest::load(&art.manifest())?;
    if manifest.circuit_hash != hex::encode(round.cs.circuit_hash()) {
        bail!("circuit manifest does not match the snapshot config's circuit");
    }
    let vk = VerificationKey::load(&art.verification_key())?;
    let paillier_pk = PaillierPublicKey::load(&art.paillier_public())?;
    let paillier_sk = PaillierSecretKey::load(&art.paillier_secret())?;

    let started = Instant::now();
    let mut verdicts = Vec::new();
    let mut loaded: Vec<Option<TrainerArtifacts>> = Vec::new();
    for trainer in 1..=config.trainers {
        match load_trainer(&art, trainer, &vk, &paillier_pk) {
            Err(e) => {
                verdicts.push(TrainerVerdict {
                    trainer,
                    detail: format!("artifacts unusable: {e:#}"),
                    ok: false,
                });
                loaded.push(None);
            }
            Ok(arts) => {
                let verdict = match check_trainer(&round, &vk, trainer, &arts)? {
                    None => TrainerVerdict {
                        trainer,
                        detail: format!("{} pieces verified", arts.bundles.len()),
                        ok: true,
                    },
                    Some(reason) => TrainerVerdict { trainer, detail: reason, ok: false },
                };
                verdicts.push(verdict);
                loaded.push(Some(arts));
            }
        }
    }
    let verify_seconds = started.elapsed().as_secs_f64();

    for v in &verdicts {
        println!(
            "verify: trainer {} {} — {}",
            v.trainer,
            if v.ok { "ok" } else { "FAILED" },
            v.detail
        );
    }
    let failed: Vec<String> = verdicts
        .iter()
        .filter(|v| !v.ok)
        .map(|v| format!("trainer {} ({})", v.trainer, v.detail))
        .collect();
    if !failed.is_empty() {
        bail!("aggregation refused, verification failed for {}", failed.join(", "));
    }
    let trainers: Vec<TrainerArtifacts> =
        loaded.into_iter().map(|t| t.expect("all trainers verified")).collect();

    // Contract round: deploy, submit in trainer order, cross-post the fold,
    // publish the decrypted result.
    let ctx = round.round_context(&paillier_pk)?;
    let mut ledger = Ledger::new();
    let address = ledger.deploy(
        "publisher",
        CODE_ID,
        ROUND_ID,
        config.trainers,
        ctx.slot_count() as u32,
        &paillier_pk.n,
    )?;
    for arts in &trainers {
        let mut w = ByteWriter::new();
        arts.submission.write(&mut w);
        ledger.invoke(
            &format!("trainer-{}", arts.submission.trainer),
            Payload::Submit {
                address: address.clone(),
                trainer: arts.submission.trainer,
                submission: w.into_bytes(),
            },
        )?;
    }

    let submissions: Vec<Submission> =
        trainers.iter().map(|t| t.submission.clone()).collect();
    let own_fold = fold_ciphertexts(&ctx, &submissions)?;
    ledger.invoke(
        "publisher",
        Payload::PublishCipherSums {
            address: address.clone(),
            sums: own_fold.iter().map(|ct| ct.c.to_bytes_be()).collect(),
        },
    )?;

    let state = ledger
        .contract(&address)
        .ok_or_else(|| anyhow!("contract vanished from the ledger"))?;
    let recorded = recorded_submissions(state, &paillier_pk)?;
    if recorded != submissions {
        bail!("contract-recorded submissions differ from the artifact directory");
    }
    let sums = zkfl::aggregation::decrypt_sums(
        &ctx,
        &paillier_pk,
        &paillier_sk,
        &cipher_sums(state, &paillier_pk)?,
    )?;
    ledger.invoke(
        "publisher",
        Payload::PublishResult {
            address: address.clone(),
            sum: sums.clone(),
            count: config.trainers,
        },
    )?;

    let phi_primes: Vec<Vec<Scalar>> = trainers
        .iter()
        .map(|t| t.bundles.last().expect("verified non-empty").phi_prime.clone())
        .collect();
    if !vrf_sum_prf(&ctx, &submissions, &phi_primes, &sums) {
        bail!("aggregate sum proof failed: commitments do not open to the decrypted sums");
    }
    if !ledger.audit() {
        bail!("ledger audit failed immediately after the round");
    }

    let global = global_model_from_sums(&ctx, &sums);
    ledger.save(&art.ledger())?;
    fs::write(
        art.global_model(),
        serde_json::to_string_pretty(&global).context("serializing global model")?,
    )?;

    let accuracy = match config.task.as_str() {
        "logistic" => {
            let holdout = config.holdout()?;
            let params = decode_params(&global.mean, global.rat);
            (!holdout.is_empty()).then(|| classification_accuracy(&params, &holdout))
        }
        _ => None,
    };

    let metrics = assemble_metrics(&art, &config, &manifest, verify_seconds, accuracy)?;
    metrics.save(&art.metrics())?;

    println!(
        "aggregate: {} trainers, sum over {} slots, mean written to {}{}",
        global.count,
        global.sum.len(),
        art.global_model().display(),
        match accuracy {
            Some(a) => format!(", holdout accuracy {a:.3}"),
            None => String::new(),
        }
    );
    println!("ledger: {} transactions, head {}", ledger.transactions().len(), hex::encode(ledger.head()));
    Ok(VerifySummary { verdicts, global, metrics })
}

fn file_size(path: &Path) -> Result<u64> {
    Ok(fs::metadata(path)
        .with_context(|| format!("sizing {}", path.display()))?
        .len())
}

/// Builds the report from what is actually on disk: proof counts from the
/// bundle files, key sizes from the key files, timings from the stage logs.
fn assemble_metrics(
    art: &Artifacts,
    config: &RunConfig,
    manifest: &CircuitManifest,
    verify_seconds: f64,
    accuracy: Option<f64>,
) -> Result<MetricsReport> {
    let setup = StageTiming::load(&art.timing("setup"))?;
    let mut prove_seconds = 0.0;
    let mut proof_count = 0u32;
    for trainer in 1..=config.trainers {
        let t = StageTiming::load(&art.timing(&format!("trainer-{trainer}")))?;
        prove_seconds += t.seconds;
        proof_count += t.items;
    }
    Ok(MetricsReport {
        task: config.task.clone(),
        trainers: config.trainers,
        pieces_per_trainer: manifest.pieces_per_trainer,
        proof_count,
        constraint_count: manifest.constraints,
        statement_len: manifest.statement_len,
        setup_seconds: setup.seconds,
        prove_seconds_per_proof: prove_seconds / proof_count.max(1) as f64,
        verify_seconds_per_proof: verify_seconds / proof_count.max(1) as f64,
        proving_key_bytes: file_size(&art.proving_key())?,
        verification_key_bytes: file_size(&art.verification_key())?,
        proof_bytes: Proof::BYTES as u64,
        accuracy,
    })
}

// ---------------------------------------------------------------------------
// e2e and audit
// ---------------------------------------------------------------------------

/// The whole round in one process: setup, every trainer, verify-aggregate.
pub fn cmd_e2e(config: &RunConfig, out: &Path) -> Result<VerifySummary> {
    cmd_setup(config, out)?;
    let snapshot = Artifacts::new(out).load_config()?;
    for trainer in 1..=snapshot.trainers {
        cmd_train_prove(out, trainer)?;
    }
    cmd_verify_aggregate(out)
}

#[derive(Clone, Debug)]
pub struct AuditSummary {
    pub transactions: u64,
    pub head: String,
    pub state_hash: String,
}

/// Replays the saved ledger from genesis and cross-checks the published
/// result against the global model artifact.
pub fn cmd_audit(out: &Path) -> Result<AuditSummary> {
    let art = Artifacts::new(out);
    let path = art.ledger();
    if !path.exists() {
        bail!(
            "no ledger in {}: run `zkfl verify-aggregate --out {}` first",
            art.root().display(),
            art.root().display()
        );
    }
    let ledger = Ledger::load(&path)?;
    if !ledger.audit() {
        bail!("ledger audit FAILED: replay does not reproduce the recorded chain and state");
    }

    let contract = ledger
        .contracts()
        .next()
        .ok_or_else(|| anyhow!("ledger holds no contract"))?;
    let (sum, count) = contract
        .result
        .clone()
        .ok_or_else(|| anyhow!("contract has no published result"))?;

    let text = fs::read_to_string(art.global_model())
        .with_context(|| format!("reading {}", art.global_model().display()))?;
    let global: GlobalModel = serde_json::from_str(&text)?;
    if global.sum != sum || global.count != count {
        bail!("published result does not match {}", art.global_model().display());
    }

    let summary = AuditSummary {
        transactions: ledger.transactions().len() as u64,
        head: hex::encode(ledger.head()),
        state_hash: hex::encode(ledger.state_hash()),
    };
    println!(
        "audit: ok — {} transactions replay to head {} (state {})",
        summary.transactions, summary.head, summary.state_hash
    );
    Ok(summary)
}
