/** Server-sent-events consumption over fetch streaming.
 *
 * fetch + ReadableStream instead of EventSource so the same code runs in
 * the browser and under node-based tests.
 */

export interface SseHandle {
  close(): void;
  /** Resolves once the stream is connected (response headers received). */
  ready: Promise<void>;
  done: Promise<void>;
}

/** Incremental SSE parser: feed chunks, get back complete `data:` payloads. */
export function parseSseChunk(buffer: string, chunk: string): { buffer: string; events: string[] } {
  let pending = buffer + chunk;
  const events: string[] = [];
  let boundary: number;
  while ((boundary = pending.indexOf('\n\n')) !== -1) {
    const block = pending.slice(0, boundary);
    pending = pending.slice(boundary + 2);
    const dataLines = block
      .split('\n')
      .filter((line) => line.startsWith('data:'))
      .map((line) => line.slice(5).trimStart());
    if (dataLines.length > 0) events.push(dataLines.join('\n'));
  }
  return { buffer: pending, events };
}

export function subscribeSse(
  url: string,
  onData: (payload: string) => void,
  onDrop?: (error: unknown) => void,
): SseHandle {
  const controller = new AbortController();
  let closed = false;
  let signalReady = () => {};
  const ready = new Promise<void>((resolve) => {
    signalReady = resolve;
  });

  const done = (async () => {
    try {
      const response = await fetch(url, {
        signal: controller.signal,
        headers: { accept: 'text/event-stream' },
      });
      if (!response.ok || !response.body) {
        throw new Error(`event stream failed: HTTP ${response.status}`);
      }
      signalReady();
      const reader = response.body.getReader();
      const decoder = new TextDecoder();
      let buffer = '';
      for (;;) {
        const { value, done: finished } = await reader.read();
        if (finished) break;
        const parsed = parseSseChunk(buffer, decoder.decode(value, { stream: true }));
        buffer = parsed.buffer;
        for (const payload of parsed.events) onData(payload);
      }
      if (!closed && onDrop) onDrop(new Error('event stream ended'));
    } catch (error) {
      signalReady();
      if (!closed && onDrop) onDrop(error);
    }
  })();

  return {
    close() {
      closed = true;
      controller.abort();
    },
    ready,
    done,
  };
}
