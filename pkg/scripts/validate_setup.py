#!/usr/bin/env python3
"""
BORPS - Setup Validation Script
Checks environment variables, dependencies and a short end-to-end chain
"""

import sys
import tempfile
from pathlib import Path

# Add project root to path
project_root = Path(__file__).parent.parent
sys.path.insert(0, str(project_root))

def print_header(text):
    """Print formatted header"""
    print("\n" + "=" * 60)
    print(text)
    print("=" * 60 + "\n")

def print_check(text, status):
    """Print check result"""
    symbol = "✅" if status else "❌"
    print(f"{symbol} {text}")

def check_environment_variables():
    """Check the optional BORPS_* variables"""
    print("1. Checking environment variables...")
    print()

    from dotenv import load_dotenv
    load_dotenv()

    from utils.env_validator import get_thread_count, validate_env_vars

    is_valid, problems = validate_env_vars()
    if is_valid:
        print_check("BORPS_* variables: Valid", True)
        print(f"   Concurrency cap: {get_thread_count()}")
    else:
        for problem in problems:
            print_check(problem, False)

    print()
    return is_valid

def check_python_packages():
    """Check if required Python packages are installed"""
    print("2. Checking Python dependencies...")
    print()

    required_packages = [
        ("numpy", "Arrays and random streams"),
        ("scipy", "Special functions and linear algebra"),
        ("pandas", "CSV input and output"),
        ("pydantic", "Data validation"),
        ("joblib", "Parallel chains"),
        ("dotenv", "Environment loader"),
    ]

    all_installed = True
    for package, description in required_packages:
        try:
            __import__(package)
            print_check(f"{package}: Installed", True)
        except ImportError:
            print_check(f"{package}: Missing ({description})", False)
            all_installed = False

    print()

    if not all_installed:
        print("Install missing packages:")
        print("  pip3 install -r requirements.txt")
        print()

    return all_installed

def check_smoke_fit():
    """Simulate a dataset and run a short chain through the CLI"""
    print("3. Running a short simulate + fit...")
    print()

    try:
        from main import main as cli

        with tempfile.TemporaryDirectory() as workdir:
            data_dir = Path(workdir) / "sim"
            fit_dir = Path(workdir) / "fit"
            code = cli(["simulate", "--design", "single-nonnull", "--error-law", "normal",
                        "--quantile", "0.5", "--seed", "1", "--out", str(data_dir)])
            print_check("simulate", code == 0)
            if code != 0:
                print()
                return False
            code = cli(["fit", str(data_dir / "data.csv"), "--response", "y", "--quantile", "0.5",
                        "--iterations", "500", "--burnin", "250", "--out", str(fit_dir)])
            print_check("fit (500 sweeps)", code == 0)
            print()
            return code == 0

    except Exception as e:
        print_check(f"Smoke run error: {str(e)}", False)
        print()
        return False

def main():
    """Main validation function"""
    print_header("BORPS - Setup Validation")

    print("Validating your setup...")
    print("This will check:")
    print("  • Environment variables")
    print("  • Python dependencies")
    print("  • A short simulate + fit run")

    results = {}

    results['env'] = check_environment_variables()
    results['python'] = check_python_packages()
    results['smoke'] = check_smoke_fit() if results['python'] else False

    print_header("Validation Summary")

    if all(results.values()):
        print("✅ All checks passed!")
        print()
        print("Next steps:")
        print("  python3 main.py simulate --design single-nonnull --error-law normal --quantile 0.5 --out sim")
        print("  python3 main.py fit sim/data.csv --response y --out fit")
        print()
        return 0

    print("⚠️  Some checks failed")
    print()
    if not results['env']:
        print("  • Fix the BORPS_* variables in .env (see .env.example)")
    if not results['python']:
        print("  • Install Python dependencies:")
        print("    pip3 install -r requirements.txt")
    if results['python'] and not results['smoke']:
        print("  • The smoke run failed; rerun with BORPS_LOG_LEVEL=DEBUG BORPS_DEBUG=true")
    print()
    print("Need help? See: docs/03-TROUBLESHOOTING.md")
    print()
    return 1

if __name__ == "__main__":
    try:
        exit_code = main()
        sys.exit(exit_code)
    except KeyboardInterrupt:
        print("\n\nValidation interrupted by user")
        sys.exit(1)
