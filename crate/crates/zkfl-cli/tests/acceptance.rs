//! The ten acceptance gates for the round pipeline, one test per gate.
//! Each test prints one `criterion NN: PASS — ...` line (visible with
//! `--nocapture`); a failure panics with the matching FAIL line.

use std::fs;
use std::time::Instant;

use num_bigint::BigInt;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use zkfl::aggregation::{
    decrypt_sums, exchange_masks, fold_ciphertexts, submit, vrf_sum_prf, AggregationScope,
    RoundContext, Submission,
};
use zkfl::algebra::{G1Elem, G2Elem, Scalar};
use zkfl::encode::ByteWriter;
use zkfl::groth16::{setup, PreparedProver, VerificationKey};
use zkfl::ledger::{Ledger, Payload};
use zkfl::paillier::{
    add, decrypt_signed, encrypt_signed, keygen, keygen_profile, KeyProfile, PaillierPublicKey,
    PaillierSecretKey,
};
use zkfl::piecechain::{
    prove_pieces, verify_piece_chain, vk_prime, Checkers, PieceBundle, T0Mode, TList,
};
use zkfl::quantize::{approx_eval, taylor_select, NonLinOp};
use zkfl::r1cs::synthesize_piece;
use zkfl::trainer::{
    build_program, classification_agreement, decode_params, observed_activations, split,
    train_float, train_local, Dataset, FloatRefMode, LocalModel, ModelSpec, TrainingTask,
};

use zkfl_cli::config::RunConfig;
use zkfl_cli::pipeline::{cmd_e2e, Artifacts};

fn report(criterion: u32, detail: &str) {
    // The harness captures println! from passing tests; write to the process's
    // stdout directly so one line per criterion survives a plain `cargo test`.
    use std::io::Write;
    let line = format!("criterion {criterion:02}: PASS — {detail}\n");
    match std::fs::OpenOptions::new().write(true).open("/dev/stdout") {
        Ok(mut out) => {
            let _ = out.write_all(line.as_bytes());
        }
        Err(_) => print!("{line}"),
    }
}

fn rng(seed: u64) -> ChaCha20Rng {
    ChaCha20Rng::seed_from_u64(seed)
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Independent slot-mean oracle: nearest integer, ties away from zero.
fn mean_oracle(sum: i128, n: i128) -> i128 {
    let q = sum / n;
    let r = sum % n;
    if 2 * r.abs() >= n {
        q + sum.signum()
    } else {
        q
    }
}

// ---------------------------------------------------------------------------
// 1. Honest end-to-end round
// ---------------------------------------------------------------------------

#[test]
fn criterion_01_honest_end_to_end_round() {
    let started = Instant::now();
    let tmp = tempfile::tempdir().unwrap();
    let mut config = RunConfig::default(); // logistic, 3 trainers, 8 samples x 10 rounds
    config.seed = Some(0xe2e);
    let summary = cmd_e2e(&config, tmp.path()).expect("honest round must pass");
    assert!(summary.verdicts.iter().all(|v| v.ok), "all chains must verify");
    assert_eq!(summary.metrics.proof_count, 240, "3 trainers x 80 pieces");

    // Direct plaintext-average oracle over the published local models.
    let art = Artifacts::new(tmp.path());
    let mut oracle_sum = vec![0i128; summary.global.sum.len()];
    for trainer in 1..=config.trainers {
        let text = fs::read_to_string(art.local_model(trainer)).unwrap();
        let model: LocalModel = serde_json::from_str(&text).unwrap();
        assert_eq!(model.params.len(), oracle_sum.len());
        for (acc, p) in oracle_sum.iter_mut().zip(&model.params) {
            *acc += p;
        }
    }
    assert_eq!(summary.global.sum, oracle_sum, "aggregate must equal the plaintext sum");
    let n = config.trainers as i128;
    for (slot, &sum) in oracle_sum.iter().enumerate() {
        assert_eq!(summary.global.mean[slot], mean_oracle(sum, n), "slot {slot} mean");
        assert_eq!(
            summary.global.mean[slot] * n + summary.global.remainder[slot],
            sum,
            "slot {slot} remainder"
        );
    }

    let elapsed = started.elapsed().as_secs_f64();
    assert!(elapsed < 300.0, "round took {elapsed:.0}s, budget is 300s");
    report(
        1,
        &format!(
            "3-trainer logistic round: 240 proofs, ledger audit ok, \
             global model matches the plaintext oracle bit-for-bit ({elapsed:.0}s)"
        ),
    );
}

// ---------------------------------------------------------------------------
// 2. Noised-key / noised-statement identity
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_noised_key_statement_identity() {
    let task = TrainingTask::new(ModelSpec::linear(1).unwrap(), 2, 1, 2, 7);
    let (program, _) = build_program(&task, None).unwrap();
    let (cs, _) = synthesize_piece(&program).unwrap();
    let mut r = rng(2);
    let (_, vk, _) = setup(&cs.to_qap(), cs.circuit_hash(), &mut r).unwrap();
    let l = cs.num_statement;

    for trial in 0..1000 {
        let statement: Vec<Scalar> = (0..l).map(|_| Scalar::random(&mut r)).collect();
        let t = TList((0..l).map(|_| Scalar::random(&mut r)).collect());
        let checkers = Checkers::compute(&vk, &t).unwrap();
        let vk_p = vk_prime(&vk, &checkers);

        let noised: Vec<Scalar> = statement.iter().zip(&t.0).map(|(a, t)| *a + t).collect();
        let lhs = vk_p.gamma_abc[0] + G1Elem::msm(&vk.gamma_abc[1..], &noised).unwrap();
        let rhs = vk.gamma_abc[0] + G1Elem::msm(&vk.gamma_abc[1..], &statement).unwrap();
        assert_eq!(lhs, rhs, "trial {trial}: noised and clean products must agree");
    }
    report(2, "1000 random (statement, noise) pairs satisfy the key-noise identity exactly");
}

// ---------------------------------------------------------------------------
// 3. Tamper suite
// ---------------------------------------------------------------------------

/// One honest two-trainer regression round, built once and cloned per trial.
struct HonestRound {
    vk: VerificationKey,
    ctx: RoundContext,
    paillier_pk: PaillierPublicKey,
    paillier_sk: PaillierSecretKey,
    bundles: Vec<Vec<PieceBundle>>,
    submissions: Vec<Submission>,
    phi_primes: Vec<Vec<Scalar>>,
    sums: Vec<i128>,
}

fn honest_round(seed: u64) -> HonestRound {
    let mut r = rng(seed);
    let task = TrainingTask::new(ModelSpec::linear(1).unwrap(), 2, 1, 2, 7);
    let (program, meta) = build_program(&task, None).unwrap();
    let (cs, map) = synthesize_piece(&program).unwrap();
    let (pk, vk, _) = setup(&cs.to_qap(), cs.circuit_hash(), &mut r).unwrap();
    let prover = PreparedProver::new(&pk, &cs).unwrap();

    let (paillier_pk, paillier_sk) = keygen_profile(KeyProfile::Test, &mut r).unwrap();
    let max_abs = 10u128.pow(task.rat + 4);
    let ctx = RoundContext::new(
        1,
        2,
        AggregationScope::OutputHalf,
        cs.num_statement,
        max_abs,
        task.rat,
        &paillier_pk,
    )
    .unwrap();
    let masks = exchange_masks(&ctx, &paillier_pk, &mut r);

    let data = Dataset::linreg();
    let p0 = vec![0i128; task.model.num_params()];
    let mut bundles = Vec::new();
    let mut submissions = Vec::new();
    let mut phi_primes = Vec::new();
    for trainer in 1..=2u32 {
        let start = ((trainer - 1) * task.samples) as usize;
        let slice = data.range(start, start + task.samples as usize).unwrap();
        let holdout = data.range(data.features.len() - 4, data.features.len()).unwrap();
        let (_, pieces) = train_local(&task, &program, &meta, &slice, &holdout, &p0).unwrap();
        let assignments: Vec<Vec<Scalar>> =
            pieces.iter().map(|p| map.assign(&p.trace).unwrap()).collect();
        let statement = map.statement_values(&pieces.last().unwrap().trace);

        let t0 = TList::initial(cs.num_statement, T0Mode::Random, &mut r).unwrap();
        let prove_rng = ChaCha20Rng::from_seed({
            let mut s = [0u8; 32];
            r.fill_bytes(&mut s);
            s
        });
        let mut replay = prove_rng.clone();
        let mut final_t = t0.clone();
        for _ in 0..assignments.len() {
            final_t = final_t.next(&mut replay);
        }
        let chain = prove_pieces(&prover, &vk, &assignments, &t0, prove_rng).unwrap();
        phi_primes.push(chain.last().unwrap().phi_prime.clone());

        let submission = submit(
            &ctx,
            &paillier_pk,
            trainer,
            &statement,
            &final_t,
            masks.row(trainer as usize),
            masks.row(trainer as usize - 1),
            &mut r,
        )
        .unwrap();
        bundles.push(chain);
        submissions.push(submission);
    }

    let sums =
        decrypt_sums(&ctx, &paillier_pk, &paillier_sk, &fold_ciphertexts(&ctx, &submissions).unwrap())
            .unwrap();
    assert!(bundles.iter().all(|b| verify_piece_chain(b, &vk).unwrap()));
    assert!(vrf_sum_prf(&ctx, &submissions, &phi_primes, &sums));
    HonestRound { vk, ctx, paillier_pk, paillier_sk, bundles, submissions, phi_primes, sums }
}

/// An honest, complete ledger round over the given submissions.
fn honest_ledger(h: &HonestRound) -> (Ledger, String) {
    let mut ledger = Ledger::new();
    let address = ledger
        .deploy("publisher", "round", 1, 2, h.ctx.slot_count() as u32, &h.paillier_pk.n)
        .unwrap();
    for s in &h.submissions {
        let mut w = ByteWriter::new();
        s.write(&mut w);
        ledger
            .invoke(
                &format!("trainer-{}", s.trainer),
                Payload::Submit {
                    address: address.clone(),
                    trainer: s.trainer,
                    submission: w.into_bytes(),
                },
            )
            .unwrap();
    }
    (ledger, address)
}

#[test]
fn criterion_03_tamper_suite() {
    let h = honest_round(3);
    const TRIALS: u32 = 100;
    let mut r = rng(33);

    // Modes 1-6 attack one chain; rejection is the chain verifier saying no.
    let chain_modes: Vec<(&str, Box<dyn Fn(&mut Vec<PieceBundle>, &mut ChaCha20Rng)>)> = vec![
        ("statement slot", Box::new(|c, r| {
            let p = r.gen_range(0..c.len());
            let k = r.gen_range(0..c[p].phi_prime.len());
            c[p].phi_prime[k] = c[p].phi_prime[k] + Scalar::random(r);
        })),
        ("proof component", Box::new(|c, r| {
            let p = r.gen_range(0..c.len());
            match r.gen_range(0..3) {
                0 => c[p].proof.a = G1Elem::random(&mut *r),
                1 => c[p].proof.b = G2Elem::random(&mut *r),
                _ => c[p].proof.c = G1Elem::random(&mut *r),
            }
        })),
        ("modified key", Box::new(|c, r| {
            let p = r.gen_range(0..c.len());
            c[p].vk_prime.gamma_abc[0] = G1Elem::random(&mut *r);
        })),
        ("checker", Box::new(|c, r| {
            let p = r.gen_range(0..c.len());
            if r.gen_bool(0.5) {
                c[p].checkers.tsum1 = G1Elem::random(&mut *r);
            } else {
                c[p].checkers.tsum2 = G1Elem::random(&mut *r);
            }
        })),
        ("key-opening response", Box::new(|c, r| {
            let p = r.gen_range(0..c.len());
            let k = r.gen_range(0..c[p].s1.z.len());
            c[p].s1.z[k] = c[p].s1.z[k] + Scalar::random(r);
        })),
        ("cross-piece noise proof", Box::new(|c, r| {
            let p = r.gen_range(1..c.len()); // piece 1 carries no continuity proof
            let s2 = c[p].s2.as_mut().expect("later pieces carry one");
            let k = r.gen_range(0..s2.z.len());
            s2.z[k] = s2.z[k] + Scalar::random(r);
        })),
    ];
    for (name, tamper) in &chain_modes {
        for trial in 0..TRIALS {
            let victim = r.gen_range(0..h.bundles.len());
            let mut chain = h.bundles[victim].clone();
            tamper(&mut chain, &mut r);
            assert!(
                !verify_piece_chain(&chain, &h.vk).unwrap(),
                "{name} trial {trial}: tampered chain must be rejected"
            );
        }
    }

    // Mode 7: linkage proof in a submission.
    for trial in 0..TRIALS {
        let mut subs = h.submissions.clone();
        let i = r.gen_range(0..subs.len());
        let k = r.gen_range(0..subs[i].s3.len());
        subs[i].s3[k].z1 = subs[i].s3[k].z1 + Scalar::random(&mut r);
        assert!(
            !vrf_sum_prf(&h.ctx, &subs, &h.phi_primes, &h.sums),
            "linkage trial {trial}: tampered proof must be rejected"
        );
    }

    // Mode 8: ciphertext. Decryption of the tampered fold either errors on
    // capacity or yields sums the commitment product check refuses.
    for trial in 0..TRIALS {
        let mut subs = h.submissions.clone();
        let i = r.gen_range(0..subs.len());
        let k = r.gen_range(0..subs[i].ciphertexts.len());
        subs[i].ciphertexts[k].c = &subs[i].ciphertexts[k].c + 1u32;
        let rejected = match fold_ciphertexts(&h.ctx, &subs)
            .and_then(|f| decrypt_sums(&h.ctx, &h.paillier_pk, &h.paillier_sk, &f))
        {
            Err(_) => true,
            Ok(sums) => !vrf_sum_prf(&h.ctx, &subs, &h.phi_primes, &sums),
        };
        assert!(rejected, "ciphertext trial {trial}: tampering must be detected");
    }

    // Mode 9: contract sum. The contract folds on-chain and refuses a
    // publisher post that does not match its own fold.
    let (mut ledger, address) = honest_ledger(&h);
    let honest_sums: Vec<Vec<u8>> = fold_ciphertexts(&h.ctx, &h.submissions)
        .unwrap()
        .iter()
        .map(|ct| ct.c.to_bytes_be())
        .collect();
    for trial in 0..TRIALS {
        let mut sums = honest_sums.clone();
        let k = r.gen_range(0..sums.len());
        let byte = r.gen_range(0..sums[k].len());
        sums[k][byte] ^= 1 << r.gen_range(0..8);
        let before = ledger.state_hash();
        assert!(
            ledger
                .invoke("publisher", Payload::PublishCipherSums { address: address.clone(), sums })
                .is_err(),
            "contract-sum trial {trial}: mismatched fold must be refused"
        );
        assert_eq!(before, ledger.state_hash(), "refused posts must not change state");
    }
    ledger
        .invoke(
            "publisher",
            Payload::PublishCipherSums { address: address.clone(), sums: honest_sums },
        )
        .expect("the honest fold is accepted");

    // Mode 10: log record. Any single-byte edit of the saved log is caught
    // on load or on audit.
    ledger
        .invoke(
            "publisher",
            Payload::PublishResult { address, sum: h.sums.clone(), count: 2 },
        )
        .unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("ledger.bin");
    ledger.save(&path).unwrap();
    let honest_bytes = fs::read(&path).unwrap();
    for trial in 0..TRIALS {
        let mut bytes = honest_bytes.clone();
        let pos = r.gen_range(0..bytes.len());
        bytes[pos] ^= 1 << r.gen_range(0..8);
        fs::write(&path, &bytes).unwrap();
        let detected = match Ledger::load(&path) {
            Err(_) => true,
            Ok(loaded) => !loaded.audit(),
        };
        assert!(detected, "log trial {trial}: byte {pos} edit must be detected");
    }

    report(3, "10 tamper modes x 100 trials: 1000/1000 rejected by the matching verifier");
}

// ---------------------------------------------------------------------------
// 4. Mask cancellation
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_mask_cancellation() {
    let mut r = rng(4);
    let (pk, sk) = keygen_profile(KeyProfile::Test, &mut r).unwrap();
    let max_abs: u128 = 1_000_000;

    for &n in &[1u32, 2, 3, 5] {
        for &l in &[1usize, 2, 8] {
            let ctx = RoundContext::new(
                7,
                n,
                AggregationScope::OutputHalf,
                2 * l, // output half = l aggregated slots
                max_abs,
                6,
                &pk,
            )
            .unwrap();
            assert_eq!(ctx.slot_count(), l);

            for trial in 0..100 {
                let masks = exchange_masks(&ctx, &pk, &mut r);
                let mut expected = vec![0i128; l];
                let mut submissions = Vec::new();
                for trainer in 1..=n {
                    let mut phi = vec![0i128; 2 * l];
                    for (k, slot) in ctx.slots().enumerate() {
                        let v = r.gen_range(-(max_abs as i128)..=max_abs as i128);
                        phi[slot] = v;
                        expected[k] += v;
                    }
                    let t = TList((0..2 * l).map(|_| Scalar::random(&mut r)).collect());
                    submissions.push(
                        submit(
                            &ctx,
                            &pk,
                            trainer,
                            &phi,
                            &t,
                            masks.row(trainer as usize),
                            masks.row(trainer as usize - 1),
                            &mut r,
                        )
                        .unwrap(),
                    );
                }
                let sums = decrypt_sums(
                    &ctx,
                    &pk,
                    &sk,
                    &fold_ciphertexts(&ctx, &submissions).unwrap(),
                )
                .unwrap();
                assert_eq!(
                    sums, expected,
                    "n={n} l={l} trial {trial}: masks must cancel exactly"
                );
            }
        }
    }
    report(4, "masks telescope to zero: n in {1,2,3,5} x l in {1,2,8}, 100/100 exact sums each");
}

// ---------------------------------------------------------------------------
// 5. Homomorphic addition and capacity
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_paillier_homomorphism_and_capacity() {
    let mut r = rng(5);
    let (pk, sk) = keygen_profile(KeyProfile::Test, &mut r).unwrap();

    for trial in 0..1000 {
        let x = r.gen_range(-(1i128 << 62)..=1i128 << 62);
        let y = r.gen_range(-(1i128 << 62)..=1i128 << 62);
        let cx = encrypt_signed(&pk, &BigInt::from(x), &mut r).unwrap();
        let cy = encrypt_signed(&pk, &BigInt::from(y), &mut r).unwrap();
        let sum = decrypt_signed(&sk, &pk, &add(&cx, &cy).unwrap()).unwrap();
        assert_eq!(sum, (x + y).into(), "trial {trial}: homomorphic sum");
    }

    // Capacity is an error, never a silent wrap: an oversized plaintext is
    // refused at encryption, and a modulus too small for the declared round
    // bound is refused when the round is set up.
    let (tiny_pk, _) = keygen(24, &mut r).unwrap(); // 48-bit modulus
    let too_big = 1i128 << 60;
    assert!(
        encrypt_signed(&tiny_pk, &BigInt::from(too_big), &mut r).is_err(),
        "plaintext beyond the signed range must be refused"
    );
    assert!(
        RoundContext::new(
            1,
            8,
            AggregationScope::OutputHalf,
            2,
            u64::MAX as u128,
            6,
            &tiny_pk
        )
        .is_err(),
        "a round whose worst-case sum cannot fit must be refused at setup"
    );
    report(5, "1000/1000 random signed pairs add homomorphically; capacity violations error out");
}

// ---------------------------------------------------------------------------
// 6. Quantization fidelity
// ---------------------------------------------------------------------------

#[test]
fn criterion_06_quantization_fidelity() {
    let task = TrainingTask::desk_logistic();
    let approx = task.select_sigmoid().unwrap().unwrap();
    let (program, meta) = build_program(&task, Some(&approx)).unwrap();
    let data = Dataset::iris_binary();
    let train = data.range(0, task.samples as usize).unwrap();
    let holdout = data.range(24, data.len()).unwrap();

    let p0 = vec![0i128; task.model.num_params()];
    let (model, _) = train_local(&task, &program, &meta, &train, &holdout, &p0).unwrap();
    let int_params = decode_params(&model.params, task.rat);

    let p0f = vec![0.0; task.model.num_params()];
    let exact = train_float(&task, &train, &p0f, FloatRefMode::IndependentExact, None).unwrap();
    let coupled =
        train_float(&task, &train, &p0f, FloatRefMode::CoupledQuantized, Some(&approx)).unwrap();

    let agreement = classification_agreement(&int_params, &exact, &holdout);
    assert!(
        agreement >= 0.95,
        "held-out agreement {agreement:.3} with the float pipeline is below 0.95"
    );

    let bound = 10.0 * 10f64.powi(-(task.rat as i32));
    let mut worst_exact: f64 = 0.0;
    for (slot, (a, b)) in int_params.iter().zip(&coupled).enumerate() {
        assert!(
            (a - b).abs() <= bound,
            "slot {slot}: integer parameter differs from the float mirror by {}",
            (a - b).abs()
        );
        worst_exact = worst_exact.max((int_params[slot] - exact[slot]).abs());
    }
    report(
        6,
        &format!(
            "held-out agreement {agreement:.3} >= 0.95; parameters within 10*10^-{} of the \
             float mirror (drift vs the exact-activation reference: {worst_exact:.2e})",
            task.rat
        ),
    );
}

// ---------------------------------------------------------------------------
// 7. Series selection for the sigmoid
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_sigmoid_series_selection() {
    let points: Vec<f64> = (-10..=10).map(|i| i as f64 * 0.05).collect();
    let approx = taylor_select(NonLinOp::Sigmoid, &points, 1e-4, f64::MAX).unwrap();
    assert!(approx.order <= 5, "selected order {} exceeds 5", approx.order);

    // The bound must hold over the activations an actual run produces.
    let task = TrainingTask::desk_logistic();
    let (program, meta) = build_program(&task, Some(&approx)).unwrap();
    let data = Dataset::iris_binary();
    let train = data.range(0, task.samples as usize).unwrap();
    let holdout = data.range(task.samples as usize, data.features.len()).unwrap();
    let p0 = vec![0i128; task.model.num_params()];
    let (_, pieces) = train_local(&task, &program, &meta, &train, &holdout, &p0).unwrap();

    let scale = 10f64.powi(task.rat as i32);
    let mut worst: f64 = 0.0;
    let activations = observed_activations(&pieces, &meta);
    assert!(!activations.is_empty());
    for z in activations {
        let got = approx_eval(&approx, z, task.rat).unwrap() as f64 / scale;
        let want = sigmoid(z as f64 / scale);
        worst = worst.max((got - want).abs());
    }
    assert!(worst <= 1e-4, "worst observed-activation error {worst:.2e} exceeds 1e-4");
    report(
        7,
        &format!(
            "order {} selected for a 1e-4 budget on |x| <= 0.5; worst error over observed \
             activations {worst:.2e}",
            approx.order
        ),
    );
}

// ---------------------------------------------------------------------------
// 8. Piece-count arithmetic
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_piece_count_arithmetic() {
    let reference = TrainingTask::new(ModelSpec::logistic4(), 2, 1200, 75, 7);
    assert_eq!(reference.q, 90_000, "default granularity is one unit per piece");
    let pieces = split(&reference, reference.q).unwrap();
    assert_eq!(pieces.len(), 90_000, "75 samples x 1200 rounds");

    let desk = TrainingTask::desk_logistic();
    let pieces = split(&desk, desk.q).unwrap();
    assert_eq!(pieces.len(), 80, "8 samples x 10 rounds");
    report(8, "split yields samples x rounds pieces at both the reference scale (90,000) and desk scale (80)");
}

// ---------------------------------------------------------------------------
// 9. Circuit cost proportionality
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_constraint_proportionality() {
    let size1 = TrainingTask::new(ModelSpec::linear(1).unwrap(), 2, 1, 2, 7).with_pieces(2);
    let size2 = TrainingTask::new(ModelSpec::linear(1).unwrap(), 2, 1, 2, 7).with_pieces(1);

    let count = |task: &TrainingTask| {
        let (program, _) = build_program(task, None).unwrap();
        let (cs, _) = synthesize_piece(&program).unwrap();
        cs.constraints.len() as f64
    };
    let c1 = count(&size1);
    let c2 = count(&size2);
    let ratio = c2 / c1;
    assert!(
        (c2 - 2.0 * c1).abs() <= 0.05 * 2.0 * c1,
        "piece size 2 costs {c2} constraints, not within 5% of 2x{c1}"
    );
    report(9, &format!("doubling the piece folds {c1} -> {c2} constraints (ratio {ratio:.3})"));
}

// ---------------------------------------------------------------------------
// 10. Ledger replay and mutation detection
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_ledger_replay_and_mutation_detection() {
    // A real honest run's log, via the round pipeline.
    let tmp = tempfile::tempdir().unwrap();
    let config = RunConfig {
        task: "linreg".into(),
        trainers: 2,
        rounds: 1,
        samples: 4,
        seed: Some(10),
        ..RunConfig::default()
    };
    cmd_e2e(&config, tmp.path()).unwrap();
    let path = Artifacts::new(tmp.path()).ledger();

    let ledger = Ledger::load(&path).unwrap();
    assert!(ledger.audit());
    let mut replayed = Ledger::new();
    for tx in ledger.transactions() {
        replayed.invoke(&tx.sender, tx.payload.clone()).unwrap();
    }
    assert_eq!(replayed.head(), ledger.head(), "replay must reproduce the chain head");
    assert_eq!(
        replayed.state_hash(),
        ledger.state_hash(),
        "replay must reproduce the state hash"
    );

    let honest = fs::read(&path).unwrap();
    let mut r = rng(1010);
    for trial in 0..100 {
        let mut bytes = honest.clone();
        let pos = r.gen_range(0..bytes.len());
        bytes[pos] ^= 1 << r.gen_range(0..8);
        fs::write(&path, &bytes).unwrap();
        let detected = match Ledger::load(&path) {
            Err(_) => true,
            Ok(loaded) => !loaded.audit(),
        };
        assert!(detected, "trial {trial}: byte {pos} mutation must be detected");
    }
    report(10, "replay reproduces head and state hash; 100/100 single-byte mutations detected");
}
