"""Test script to verify the game-lab installation."""

import importlib
import sys
from pathlib import Path

ROOT = Path(__file__).parent.parent


def test_imports():
    """Test that all package modules can be imported."""
    print("🔄 Testing imports...")

    sys.path.insert(0, str(ROOT / "src"))

    required_modules = [
        "game_lab.utility",
        "game_lab.search",
        "game_lab.aloha",
        "game_lab.dynamics",
        "game_lab.variations",
        "game_lab.powerctl",
        "game_lab.scenario",
        "game_lab.cli",
        "game_lab.config",
        "game_lab.utils",
    ]

    failed_imports = []

    for module in required_modules:
        try:
            importlib.import_module(module)
            print(f"✅ {module}")
        except ImportError as e:
            print(f"❌ {module}: {e}")
            failed_imports.append(module)

    assert not failed_imports, f"Failed to import: {', '.join(failed_imports)}"
    print("✅ All imports successful")


def test_configuration():
    """Test configuration loading."""
    print("\n🔄 Testing configuration...")

    from game_lab.config import AppConfig, GameLabConfig, NumericsConfig

    app = AppConfig()
    assert app.log_level in ("DEBUG", "INFO", "WARNING", "ERROR")
    print("✅ App configuration class works")

    numerics = NumericsConfig()
    assert 0.0 < numerics.q_min < numerics.q_max < 1.0
    print("✅ Numerics configuration class works")

    assert GameLabConfig().max_workers() >= 1
    print("✅ Worker count resolved")


def test_file_structure():
    """Test that all required files exist."""
    print("\n🔄 Testing file structure...")

    required_files = [
        "main.py",
        "src/game_lab/__init__.py",
        "src/game_lab/aloha.py",
        "src/game_lab/dynamics.py",
        "src/game_lab/powerctl.py",
        "src/game_lab/cli.py",
        "scenarios/aloha_demands.json",
        "requirements.txt",
        "README.md",
    ]

    missing_files = []

    for file in required_files:
        if (ROOT / file).exists():
            print(f"✅ {file}")
        else:
            print(f"❌ {file}")
            missing_files.append(file)

    assert not missing_files, f"Missing files: {', '.join(missing_files)}"
    print("✅ All required files present")


def test_dependencies():
    """Test that external dependencies are available."""
    print("\n🔄 Testing dependencies...")

    external_deps = ["numpy", "scipy", "pandas", "pydantic", "pydantic_settings", "dotenv", "loguru"]

    failed_deps = []

    for dep in external_deps:
        try:
            importlib.import_module(dep)
            print(f"✅ {dep}")
        except ImportError:
            print(f"❌ {dep}")
            failed_deps.append(dep)

    assert not failed_deps, f"Missing dependencies: {', '.join(failed_deps)}. Run: pip install -r requirements.txt"
    print("✅ All dependencies available")


def main():
    """Run all tests."""
    print("🧪 game-lab Installation Test")
    print("=" * 50)

    tests = [test_file_structure, test_dependencies, test_imports, test_configuration]

    passed = 0
    total = len(tests)

    for test in tests:
        try:
            test()
            passed += 1
        except Exception as e:
            print(f"❌ Test failed with error: {e}")

    print(f"\n📊 Test Results: {passed}/{total} tests passed")

    if passed == total:
        print("🎉 All tests passed! Installation is successful.")
        print("\nNext steps:")
        print("1. Optionally copy env_example.txt to .env")
        print("2. Run: python main.py nep --config scenarios/aloha_demands.json")
    else:
        print("❌ Some tests failed. Please check the errors above.")
        sys.exit(1)


if __name__ == "__main__":
    main()
