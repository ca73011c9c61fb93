# Checking the abstract semantics against concrete runs of generated programs
from notjsAbsInt import generate_program, run, soundness_check

# Default parameters
num_programs = 50
program_size = 120
sensitivities = ["fs", "stack:2.1", "obj:1.0", "sig:1.0"]

failures = 0
for seed in range(num_programs):
    program = generate_program(seed, size=program_size)
    outcome = run(program, fuel=10_000)
    for strategy in sensitivities:
        report = soundness_check(program, strategy, fuel=10_000, minimize=True)
        if not report.ok:
            failures += 1
            print(f"seed {seed} ({outcome.describe()}): {report.describe()}")

print(f"{num_programs} programs x {len(sensitivities)} sensitivities: {failures} violations")
