/** Command line: render <figure-kind> <csv...> -o <path> */

import { writeFileSync } from 'fs'
import { FIGURE_KINDS, render } from './figures'

export function main(argv: string[]): number {
  const args = [...argv]
  if (args.length === 0 || args[0] === '--help') {
    process.stderr.write(
      `usage: render <figure-kind> <csv...> -o <output.svg>\n` +
        `figure kinds: ${FIGURE_KINDS.join(', ')}\n`,
    )
    return args.length === 0 ? 2 : 0
  }
  const kind = args.shift()!
  let outPath: string | null = null
  const csvs: string[] = []
  while (args.length > 0) {
    const tok = args.shift()!
    if (tok === '-o' || tok === '--output') {
      outPath = args.shift() ?? null
    } else {
      csvs.push(tok)
    }
  }
  if (outPath === null) {
    process.stderr.write('missing -o <output.svg>\n')
    return 2
  }
  try {
    writeFileSync(outPath, render(kind, csvs))
  } catch (err) {
    process.stderr.write(`${(err as Error).message}\n`)
    return 1
  }
  return 0
}

if (require.main === module) {
  process.exit(main(process.argv.slice(2)))
}
