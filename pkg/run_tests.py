#!/usr/bin/env python3
"""
テスト実行スクリプト
単体・統合テストと時間のかかるオラクル照合を切り替えて実行
"""
import os
import sys
import subprocess
import argparse


def setup_test_environment():
    """テスト環境のセットアップ"""
    os.environ['TESTING'] = 'true'
    os.environ['PYTHONPATH'] = os.getcwd()
    # ソルバーのログは警告以上のみ
    os.environ.setdefault('LOG_LEVEL', 'WARNING')


def build_command(target, marker=None, verbose=True):
    cmd = [sys.executable, '-m', 'pytest', target, '--tb=short']
    if marker:
        cmd += ['-m', marker]
    if verbose:
        cmd.append('-v')
    return cmd


def run(cmd):
    print(f"実行コマンド: {' '.join(cmd)}")
    print("-" * 50)
    try:
        result = subprocess.run(cmd, capture_output=False, text=True)
        return result.returncode == 0
    except Exception as e:
        print(f"テスト実行エラー: {e}")
        return False


def main():
    parser = argparse.ArgumentParser(description='多目的MDP判定ツールのテスト実行')
    parser.add_argument('--type', choices=['unit', 'integration', 'fast', 'slow', 'all'],
                        default='fast', help='テストタイプ (fast は slow 以外の全テスト)')
    parser.add_argument('--file', help='特定のテストファイル')
    parser.add_argument('--quiet', action='store_true', help='詳細出力を無効化')

    args = parser.parse_args()
    setup_test_environment()

    marker = None
    if args.file:
        target = args.file
    elif args.type in ('unit', 'integration'):
        target = f'tests/{args.type}/'
        marker = 'not slow'
    else:
        target = 'tests/'
        marker = {'fast': 'not slow', 'slow': 'slow'}.get(args.type)

    success = run(build_command(target, marker, not args.quiet))
    if success:
        print("\n✅ テストが正常に完了しました")
        sys.exit(0)
    else:
        print("\n❌ テストが失敗しました")
        sys.exit(1)


if __name__ == '__main__':
    main()
