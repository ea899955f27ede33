use scatter_crypt_web::Demo;

#[test]
fn correct_phases_beat_random_guesses() {
    // the seeds the page starts with
    let demo = Demo::new(7, 8, 1).unwrap();
    assert_eq!((demo.width(), demo.height()), (16, 16));
    assert_eq!(demo.ciphertext().len(), 32 * 32);
    let phases = demo.key_phases();
    assert_eq!(phases.len(), demo.subset().len());
    let own = demo.decrypt_with_phases(phases.clone()).unwrap();
    let attack = demo.random_attack(10, 5).unwrap();
    eprintln!("own {:.3} best attack {:.3}", own.ssim(), attack.ssim());
    assert!(own.ssim() > 2.0 * attack.ssim());
    assert_eq!(own.pixels().len(), 256);
}

#[test]
fn key_phases_round_trip() {
    let demo = Demo::new(3, 4, 1).unwrap();
    let phases = demo.key_phases();
    assert!(phases.iter().all(|p| (-1.0..=1.0).contains(p) && *p > -1.0));
    let a = demo.decrypt_with_phases(phases.clone()).unwrap();
    let shifted: Vec<f64> = phases.iter().map(|p| p + 2.0).collect();
    let b = demo.decrypt_with_phases(shifted).unwrap();
    assert!((a.ssim() - b.ssim()).abs() < 1e-9);
}

#[test]
fn new_encryption_changes_the_key() {
    let mut demo = Demo::new(3, 4, 1).unwrap();
    let before = demo.key_phases();
    demo.encrypt(2).unwrap();
    assert_ne!(before, demo.key_phases());
    assert!(demo.decrypt_with_phases(vec![0.0]).is_err());
}
